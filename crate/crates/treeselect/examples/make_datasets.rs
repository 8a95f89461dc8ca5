//! Regenerate the bundled benchmark stand-ins under `data/`.
//!
//! The three CSVs mirror the shapes of classic UCI benchmarks (208x60
//! two-class signal spectra, 1000x20 mixed-type credit records, 846x18
//! four-class silhouettes) but are synthesized here: the build environment
//! has no access to the originals. Generation is fully deterministic, so
//! `cargo run --example make_datasets` always reproduces the committed
//! files byte for byte. Drop real UCI files over them if you have them;
//! every tool in this workspace reads plain CSV.
//!
//! Usage: `cargo run -p treeselect --example make_datasets -- [out_dir]`

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let out_dir = std::env::args().nth(1).unwrap_or_else(|| "data".into());
    std::fs::create_dir_all(&out_dir).expect("create output directory");
    write(&out_dir, "sonar.csv", sonar_like());
    write(&out_dir, "german.csv", german_like());
    write(&out_dir, "vehicle.csv", vehicle_like());
}

fn write(dir: &str, name: &str, content: String) {
    let path = Path::new(dir).join(name);
    std::fs::write(&path, content).expect("write dataset");
    println!("wrote {}", path.display());
}

/// Standard normal via Box-Muller; two uniforms per draw keeps the stream
/// layout independent of caching.
fn normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// 208 rows x 60 numeric bands, classes R/M (97/111).
///
/// Each row is a smooth spectrum: a shared backbone plus a class-dependent
/// ridge spread over two band ranges, heavy neighbor correlation (AR noise
/// and a per-row gain), so the class signal is real but highly redundant
/// across adjacent bands.
fn sonar_like() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5043_4152);
    let n_bands = 60;
    let mut labels: Vec<u8> = vec![0; 97]; // R
    labels.extend(std::iter::repeat_n(1, 111)); // M
    shuffle(&mut labels, &mut rng);

    let backbone: Vec<f64> = (0..n_bands)
        .map(|b| {
            let x = b as f64 / (n_bands - 1) as f64;
            0.18 + 0.55 * (std::f64::consts::PI * x).sin().powf(1.3) * (1.0 - 0.45 * x)
        })
        .collect();
    // Class contrast: several weak ridges, so the signal is spread across
    // many mutually redundant bands and no single band separates cleanly.
    let contrast: Vec<f64> = (0..n_bands)
        .map(|b| {
            let x = b as f64;
            // Smooth ridges plus a small per-band idiosyncratic offset, so
            // most bands carry a faint class signal of their own.
            let idio = ((b * 2654435761) % 1000) as f64 / 1000.0 - 0.5;
            0.030 * gauss(x, 11.0, 5.0) - 0.027 * gauss(x, 22.0, 4.0)
                + 0.024 * gauss(x, 33.0, 5.0)
                - 0.025 * gauss(x, 46.0, 4.0)
                + 0.021 * gauss(x, 55.0, 3.0)
                + 0.020 * idio
        })
        .collect();

    let mut out = String::new();
    let header: Vec<String> = (1..=n_bands).map(|b| format!("band_{b:02}")).collect();
    let _ = writeln!(out, "{},class", header.join(","));
    for &label in &labels {
        let sign = if label == 1 { 1.0 } else { -1.0 };
        let gain = 1.0 + 0.17 * normal(&mut rng);
        let mut ar = 0.0;
        let mut cells: Vec<String> = Vec::with_capacity(n_bands);
        for b in 0..n_bands {
            ar = 0.80 * ar + 0.60 * normal(&mut rng);
            let value = gain * (backbone[b] + sign * contrast[b])
                + 0.050 * ar
                + 0.040 * normal(&mut rng);
            cells.push(format!("{:.4}", value.clamp(0.0, 1.0)));
        }
        let _ = writeln!(out, "{},{}", cells.join(","), if label == 1 { "M" } else { "R" });
    }
    out
}

fn gauss(x: f64, mu: f64, sigma: f64) -> f64 {
    (-((x - mu).powi(2)) / (2.0 * sigma * sigma)).exp()
}

fn shuffle<T, R: Rng>(items: &mut [T], rng: &mut R) {
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i);
        items.swap(i, j);
    }
}

/// 1000 rows x 20 mixed features (13 categorical, 7 numeric), classes
/// good/bad (roughly 70/30).
///
/// A latent risk score mixes a handful of categorical effects and numeric
/// trends with noise; several features carry nothing at all.
fn german_like() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4752_4d4e);
    let n = 1000;
    let arities = [4usize, 5, 10, 5, 5, 4, 3, 4, 3, 3, 4, 3, 2];
    // Effect per level for the informative categorical features; zeros for
    // the noise ones.
    let cat_effects: Vec<Vec<f64>> = arities
        .iter()
        .enumerate()
        .map(|(j, &arity)| {
            (0..arity)
                .map(|level| match j {
                    0 => [0.9, 0.1, -0.5, -0.9][level],
                    1 => [-0.8, -0.3, 0.0, 0.4, 0.9][level % 5],
                    3 => [0.7, 0.2, -0.1, -0.4, -0.8][level % 5],
                    5 => [0.6, -0.6, 0.2, -0.2][level % 4],
                    10 => [0.5, -0.5, 0.0, 0.3][level % 4],
                    _ => 0.0,
                })
                .collect()
        })
        .collect();

    let mut out = String::new();
    let mut header: Vec<String> = (1..=20).map(|j| format!("attr{j:02}")).collect();
    header.push("class".into());
    let _ = writeln!(out, "{}", header.join(","));

    for _ in 0..n {
        let mut score = 0.0;
        let mut cells: Vec<String> = Vec::with_capacity(21);
        for (j, &arity) in arities.iter().enumerate() {
            let level = rng.gen_range(0..arity);
            score += cat_effects[j][level];
            cells.push(format!("c{}", level + 1));
        }
        // Numerics: duration/amount/age-like trends plus noise columns.
        let duration = 4.0 + rng.gen_range(0.0f64..68.0).round();
        let amount = (250.0 + rng.gen_range(0.0f64..18_000.0)).round();
        let age = 19.0 + rng.gen_range(0.0f64..56.0).round();
        let rate = rng.gen_range(1..=4) as f64;
        let residence = rng.gen_range(1..=4) as f64;
        let existing = rng.gen_range(1..=4) as f64;
        let dependents = rng.gen_range(1..=2) as f64;
        score += 0.035 * (duration - 21.0);
        score += 0.00012 * (amount - 3300.0);
        score -= 0.018 * (age - 35.0);
        score += 0.15 * (rate - 2.5);
        score += 1.0 * normal(&mut rng);
        for v in [duration, amount, age, rate, residence, existing, dependents] {
            cells.push(format!("{v}"));
        }
        let label = if score > 0.85 { "bad" } else { "good" };
        cells.push(label.into());
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// 846 rows x 18 numeric features, four classes (212/217/218/199).
///
/// Every feature carries a modest share of the class signal, so a strong
/// classifier keeps improving as features accumulate while a single tree
/// saturates early.
fn vehicle_like() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5645_4843);
    let n_features = 18;
    let counts = [212usize, 217, 218, 199];
    let class_names = ["van", "saab", "bus", "opel"];

    // Class centroids: moderate separation in every dimension.
    let mut centroids = [[0.0f64; 18]; 4];
    for class in centroids.iter_mut() {
        for cell in class.iter_mut().take(n_features) {
            *cell = 0.75 * normal(&mut rng);
        }
    }

    let mut labels: Vec<usize> = Vec::new();
    for (c, &k) in counts.iter().enumerate() {
        labels.extend(std::iter::repeat_n(c, k));
    }
    shuffle(&mut labels, &mut rng);

    let mut out = String::new();
    let header: Vec<String> = (1..=n_features).map(|d| format!("feat{d:02}")).collect();
    let _ = writeln!(out, "{},class", header.join(","));
    for &label in &labels {
        let mut cells: Vec<String> = Vec::with_capacity(n_features);
        let shared = normal(&mut rng); // common factor, mild correlation
        for &center in centroids[label].iter().take(n_features) {
            let value = 100.0 + 20.0 * (center + normal(&mut rng) + 0.3 * shared);
            cells.push(format!("{value:.1}"));
        }
        let _ = writeln!(out, "{},{}", cells.join(","), class_names[label]);
    }
    out
}
