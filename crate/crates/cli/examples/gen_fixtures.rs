//! Regenerates the synthetic datasets in `data/fixtures/`.
//!
//! cargo run -p fluxline-cli --example gen_fixtures [-- OUT_DIR]

use std::fmt::Write as _;
use std::path::PathBuf;

use fluxline::fit::{BetaModel, ExpDecay, Model, RamseyFringe, RbDecay, TuningCurve};
use fluxline::TransmonParams;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn write(
    dir: &PathBuf,
    name: &str,
    header: &str,
    xs: &[f64],
    model: &dyn Model,
    p: &[f64],
    sigma: f64,
    seed: u64,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut text = format!("{header}\n");
    for &x in xs {
        let y = model.value(x, p) + noise.sample(&mut rng);
        writeln!(text, "{x},{y:.9}").unwrap();
    }
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    println!("wrote {}", path.display());
}

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/fixtures"))
        });
    std::fs::create_dir_all(&dir).unwrap();

    write(
        &dir,
        "t1.csv",
        "t_us,population",
        &grid(0.0, 250.0, 101),
        &ExpDecay,
        &[53.0, 0.9, 0.05],
        0.003,
        11,
    );
    write(
        &dir,
        "ramsey.csv",
        "t_us,population",
        &grid(0.0, 30.0, 301),
        &RamseyFringe,
        &[10.0, 0.5, 0.45, 0.5, 0.3],
        0.003,
        12,
    );
    let lengths: Vec<f64> = (0..40).map(|i| (1 + 25 * i) as f64).collect();
    write(
        &dir,
        "rb.csv",
        "clifford_length,survival",
        &lengths,
        &RbDecay,
        &[0.5, 0.5, 0.9954],
        0.002,
        13,
    );
    write(
        &dir,
        "tuning.csv",
        "bias_ma,f01_mhz",
        &grid(-1.0, 1.0, 81),
        &TuningCurve,
        &[2140.0, 9040.0, 182.0, 0.8, 0.1],
        1.0,
        14,
    );
    let q0 = TransmonParams::new(182.0, 2140.0, 9040.0).unwrap();
    let beta = BetaModel::new(&q0, 0.0).unwrap();
    write(
        &dir,
        "beta.csv",
        "amplitude_v,f_bar_mhz",
        &grid(0.0, 0.5, 26),
        &beta,
        &[0.510],
        0.2,
        15,
    );
}
