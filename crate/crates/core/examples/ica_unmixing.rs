//! Mixes two Laplace sources and recovers them with whitening + FastICA.

use misc_clustering::data::DataMatrix;
use misc_clustering::ica::{amari_error, whiten, FastIca};
use ndarray::{array, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

fn main() -> misc_clustering::Result<()> {
    let n = 2000;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // Laplace(0, 1) as the difference of two unit exponentials.
    let sources = Array2::from_shape_fn((2, n), |_| {
        let a: f64 = Exp1.sample(&mut rng);
        let b: f64 = Exp1.sample(&mut rng);
        a - b
    });
    let mixing = array![[1.0, 0.6], [0.4, 1.0]];
    let x = DataMatrix::new(mixing.dot(&sources))?;

    let whitened = whiten(&x)?;
    let dec = FastIca::default().fit(&whitened)?;
    println!("converged: {} after {} iterations", dec.converged, dec.iterations);

    let product = dec.full_unmixing().dot(&mixing);
    println!("unmixing x mixing:\n{product:.3}");
    println!("amari error: {:.4}", amari_error(&product.view())?);
    Ok(())
}
