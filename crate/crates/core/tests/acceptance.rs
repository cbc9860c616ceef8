//! Acceptance suite. `acceptance_core` runs criteria 1-9 and prints one
//! PASS/FAIL line per criterion. Criteria 10-12 need converted public
//! datasets and are ignored by default:
//!
//! ```text
//! TPCA_INDIAN_PINES_CUBE=.../indian_pines.cube TPCA_INDIAN_PINES_LABELS=.../indian_pines.labels \
//! TPCA_PAVIA_CUBE=.../paviau.cube TPCA_PAVIA_LABELS=.../paviau.labels \
//!     cargo test --release -p tpca-core --test acceptance -- --ignored --nocapture
//! ```

use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use tpca_core::eval::{kappa, overall_accuracy};
use tpca_core::hsi::{load_cube, load_labels};
use tpca_core::pipeline::{evaluate_repeated, sweep, Scene};
use tpca_core::synth::TwoTextureScene;
use tpca_core::tpca::{delta_map, delta_map_dc};
use tpca_core::{
    tsvd, CMatrix, ConfusionMatrix, CVector, Extractor, NearestNeighbor, PcaModel, SweepRow,
    TensorScalar, TensorShape, TpcaModel,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn shape(m: usize, n: usize) -> TensorShape {
    TensorShape::new(m, n).unwrap()
}

fn random_scalar(rng: &mut ChaCha8Rng, sh: TensorShape) -> TensorScalar {
    TensorScalar::from_fn(sh, |_, _| rng.random_range(-1.0..1.0))
}

fn random_cvector(rng: &mut ChaCha8Rng, len: usize, sh: TensorShape) -> CVector {
    CVector::new(sh, (0..len).map(|_| random_scalar(rng, sh)).collect()).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ring_axioms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for sh in [shape(1, 1), shape(2, 2), shape(3, 3)] {
        let (e, z) = (TensorScalar::identity(sh), TensorScalar::zero(sh));
        for _ in 0..250 {
            let (x, y, w) = (
                random_scalar(&mut rng, sh),
                random_scalar(&mut rng, sh),
                random_scalar(&mut rng, sh),
            );
            let m = |a: &TensorScalar, b: &TensorScalar| a.mul(b).unwrap();
            worst = worst
                .max(m(&m(&x, &y), &w).max_abs_diff(&m(&x, &m(&y, &w))))
                .max(m(&x, &y).max_abs_diff(&m(&y, &x)))
                .max(m(&x, &y.add(&w).unwrap()).max_abs_diff(&m(&x, &y).add(&m(&x, &w)).unwrap()))
                .max(m(&e, &x).max_abs_diff(&x))
                .max(m(&z, &x).max_abs_diff(&z));
        }
    }
    check(worst < 1e-9, format!("250 triples x 3 shapes, max deviation {worst:.2e}"))
}

fn convolution_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let sh = shape(3, 3);
    let worst = (0..1000)
        .map(|_| {
            let (x, y) = (random_scalar(&mut rng, sh), random_scalar(&mut rng, sh));
            x.mul_fft(&y).unwrap().max_abs_diff(&x.mul(&y).unwrap())
        })
        .fold(0.0, f64::max);
    check(worst < 1e-9, format!("1000 pairs, max deviation {worst:.2e}"))
}

fn slice_unitary_defect(u: &DMatrix<Complex64>) -> f64 {
    let g = u.adjoint() * u - DMatrix::<Complex64>::identity(u.ncols(), u.ncols());
    g.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn tsvd_contract() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (sh, dim) = (shape(3, 3), 8);
    let (mut recon, mut unitary, mut residue) = (0.0f64, 0.0f64, 0.0f64);
    let mut s_ok = true;
    for _ in 0..50 {
        let a = CMatrix::from_fn(dim, dim, sh, |_, _| random_scalar(&mut rng, sh)).unwrap();
        let g = a.hermitian().mul_direct(&a).unwrap();
        let f = tsvd(&g).map_err(|e| e.to_string())?;
        recon = recon.max(f.reconstruct().map_err(|e| e.to_string())?.max_abs_diff(&g));
        for (u, v) in f.u.slices().iter().zip(f.v.slices()) {
            unitary = unitary.max(slice_unitary_defect(u)).max(slice_unitary_defect(v));
        }
        for s in f.s.slices() {
            for r in 0..dim {
                for c in 0..dim {
                    let z = s[(r, c)];
                    let diag_ok = if r == c { z.im == 0.0 && z.re >= 0.0 } else { z.norm() == 0.0 };
                    s_ok &= diag_ok;
                }
                s_ok &= r == 0 || s[(r - 1, r - 1)].re >= s[(r, r)].re;
            }
        }
        residue = residue
            .max(f.u.idft_residue())
            .max(f.s.idft_residue())
            .max(f.v.idft_residue());
    }
    check(
        recon < 1e-8 && unitary < 1e-8 && s_ok && residue < 1e-10,
        format!(
            "50 Hermitian 8x8 (3x3): reconstruction {recon:.2e}, unitarity {unitary:.2e}, \
             S real/non-negative/descending {s_ok}, imaginary residue {residue:.2e}"
        ),
    )
}

fn backward_compatibility() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let sh = shape(1, 1);
    let samples: Vec<CVector> = (0..100).map(|_| random_cvector(&mut rng, 20, sh)).collect();
    let raw: Vec<Vec<f64>> = samples.iter().map(|s| s.to_cube()).collect();
    let tpca = TpcaModel::fit(&samples).map_err(|e| e.to_string())?;
    let pca = PcaModel::fit(&raw).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (s, r) in samples.iter().zip(&raw) {
        for d in [1, 5, 20] {
            let a = tpca.transform(s, d).unwrap();
            let b = pca.transform(r, d).unwrap();
            for (x, y) in a.iter().zip(b.iter()) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    check(worst < 1e-8, format!("N=100, D=20, d in {{1,5,20}}: max deviation {worst:.2e}"))
}

fn delta_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let worst = (0..100)
        .map(|_| {
            let y = random_cvector(&mut rng, 10, shape(3, 3));
            delta_map(&y)
                .iter()
                .zip(delta_map_dc(&y))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    check(worst < 1e-10, format!("100 C-vectors, max deviation {worst:.2e}"))
}

fn metric_units() -> Outcome {
    let cm = ConfusionMatrix::from_counts(vec![1, 2], vec![25, 5, 10, 60]).map_err(|e| e.to_string())?;
    let oa = overall_accuracy(&cm).map_err(|e| e.to_string())?;
    let k = kappa(&cm).map_err(|e| e.to_string())?;
    // counts[t][p] = rowsum_t * colsum_p / total for rows (10, 90), cols (10, 90).
    let indep = ConfusionMatrix::from_counts(vec![1, 2], vec![1, 9, 9, 81]).map_err(|e| e.to_string())?;
    let k0 = kappa(&indep).map_err(|e| e.to_string())?;
    check(
        (oa - 0.85).abs() < 1e-6 && (k - 0.6591).abs() < 1e-4 && (k - 0.29 / 0.44).abs() < 1e-6 && k0.abs() < 1e-12,
        format!("OA {oa:.6}, kappa {k:.6}, independent kappa {k0:.2e}"),
    )
}

fn distance_preservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let bands = 12;
    let centres: Vec<Vec<f64>> = (0..4)
        .map(|_| (0..bands).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    let mut pixels = Vec::with_capacity(500);
    let mut labels = Vec::with_capacity(500);
    for _ in 0..500 {
        let class = rng.random_range(0..4);
        let spectrum: Vec<f64> = centres[class]
            .iter()
            .map(|c| {
                let z: f64 = StandardNormal.sample(&mut rng);
                c + 0.3 * z
            })
            .collect();
        pixels.push(spectrum);
        labels.push(class as u16 + 1);
    }
    let (train, test) = pixels.split_at(50);
    let model = PcaModel::fit(train).map_err(|e| e.to_string())?;
    let centre = |v: &Vec<f64>| -> Vec<f64> { v.iter().zip(model.mean()).map(|(a, b)| a - b).collect() };
    let feats = |v: &Vec<f64>| model.transform(v, bands).unwrap().into_vec();
    let classify = |tr: Vec<Vec<f64>>, te: Vec<Vec<f64>>| {
        NearestNeighbor::new(&tr, &labels[..50])
            .and_then(|nn| nn.classify_batch(&te))
            .map_err(|e| e.to_string())
    };
    let raw = classify(train.iter().map(centre).collect(), test.iter().map(centre).collect())?;
    let pca = classify(train.iter().map(feats).collect(), test.iter().map(feats).collect())?;
    let same = raw.iter().zip(&pca).filter(|(a, b)| a == b).count();
    check(same == raw.len(), format!("{same}/{} identical predictions", raw.len()))
}

/// Feature dimension used for both extractors in the synthetic benchmark.
const SYNTH_D: usize = 4;

fn synthetic_advantage() -> Outcome {
    let mut pca = 0.0;
    let mut tpca = 0.0;
    for seed in 0..10u64 {
        let (cube, labels) = TwoTextureScene::default().generate(seed).map_err(|e| e.to_string())?;
        let scene = Scene::new(&cube, labels).map_err(|e| e.to_string())?;
        let run = |kind| {
            evaluate_repeated(&scene, kind, SYNTH_D, seed, 0.10, 1)
                .map(|r| r.oa)
                .map_err(|e| e.to_string())
        };
        pca += run(Extractor::Pca)? / 10.0;
        tpca += run(Extractor::Tpca)? / 10.0;
    }
    check(
        tpca > pca,
        format!("40x40x8, 10 seeds, d={SYNTH_D}: mean OA TPCA {tpca:.4} vs PCA {pca:.4}"),
    )
}

fn linear_r2(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    sxy * sxy / (sxx * syy)
}

fn complexity() -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let dim = 32;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for side in 1..=4 {
        let sh = shape(side, side);
        let g = CMatrix::from_fn(dim, dim, sh, |_, _| random_scalar(&mut rng, sh)).unwrap();
        let best = (0..5)
            .map(|_| {
                pool.install(|| {
                    let start = Instant::now();
                    tsvd(&g).map(|_| start.elapsed().as_secs_f64())
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        xs.push((side * side) as f64);
        ys.push(best);
    }
    let r2 = linear_r2(&xs, &ys);
    let times: Vec<String> = ys.iter().map(|t| format!("{:.2}ms", t * 1e3)).collect();
    check(r2 > 0.9, format!("D=32, mn=1,4,9,16: {} (R^2 {r2:.3})", times.join(", ")))
}

#[test]
fn acceptance_core() {
    let criteria: [Criterion; 9] = [
        ("ring axioms", ring_axioms),
        ("convolution theorem oracle", convolution_oracle),
        ("tsvd contract", tsvd_contract),
        ("backward compatibility", backward_compatibility),
        ("delta identity", delta_identity),
        ("metric unit tests", metric_units),
        ("distance preservation", distance_preservation),
        ("synthetic spatial advantage", synthetic_advantage),
        ("tsvd linear in mn", complexity),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                println!("criterion {}: FAIL  {name}: {detail}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

struct Dataset {
    name: &'static str,
    raw: f64,
    pca: f64,
    tpca: f64,
}

const INDIAN_PINES: Dataset = Dataset {
    name: "INDIAN_PINES",
    raw: 0.7343,
    pca: 0.7349,
    tpca: 0.7915,
};

const PAVIA: Dataset = Dataset {
    name: "PAVIA",
    raw: 0.8635,
    pca: 0.8640,
    tpca: 0.9235,
};

const TOLERANCE: f64 = 0.025;
const REPETITIONS: usize = 10;

fn load_scene(ds: &Dataset) -> Scene {
    let var = |suffix: &str| {
        let key = format!("TPCA_{}_{suffix}", ds.name);
        std::env::var(&key).unwrap_or_else(|_| panic!("set {key} to run this dataset check"))
    };
    let cube = load_cube(var("CUBE")).expect("cube");
    let labels = load_labels(var("LABELS")).expect("labels");
    Scene::new(&cube, labels).expect("scene")
}

/// Rows for d = 5, 10, ... up to the largest multiple of 5 not above the band count.
fn dataset_sweep(scene: &Scene) -> Vec<SweepRow> {
    let dims: Vec<usize> = (5..=scene.bands()).step_by(5).collect();
    sweep(scene, &[Extractor::Pca, Extractor::Tpca], &dims, 0, 0.10, REPETITIONS).expect("sweep")
}

fn best(rows: &[SweepRow], kind: Extractor) -> f64 {
    rows.iter()
        .filter(|r| r.extractor == kind)
        .map(|r| r.oa)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn table_check(ds: &Dataset) {
    let scene = load_scene(ds);
    let raw = evaluate_repeated(&scene, Extractor::Raw, scene.bands(), 0, 0.10, REPETITIONS)
        .expect("raw")
        .oa;
    let rows = dataset_sweep(&scene);
    let (pca, tpca) = (best(&rows, Extractor::Pca), best(&rows, Extractor::Tpca));
    let mut ok = true;
    for (label, got, want) in [("raw", raw, ds.raw), ("pca", pca, ds.pca), ("tpca", tpca, ds.tpca)] {
        let pass = (got - want).abs() <= TOLERANCE;
        ok &= pass;
        println!(
            "{}: {label} mean OA {:.2} (target {:.2} +- 2.5) {}",
            ds.name,
            got * 100.0,
            want * 100.0,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    let margin = tpca - pca;
    ok &= margin >= 0.03;
    println!("{}: TPCA - PCA = {:.2} points (need >= 3)", ds.name, margin * 100.0);
    assert!(ok);
}

fn curve_check(ds: &Dataset) {
    let scene = load_scene(ds);
    let rows = dataset_sweep(&scene);
    let pca: Vec<&SweepRow> = rows.iter().filter(|r| r.extractor == Extractor::Pca).collect();
    let tpca: Vec<&SweepRow> = rows.iter().filter(|r| r.extractor == Extractor::Tpca).collect();
    let mut crossovers = Vec::new();
    for (p, t) in pca.iter().zip(&tpca) {
        println!("{}: d={} PCA {:.4} TPCA {:.4}", ds.name, p.d, p.oa, t.oa);
        if t.oa < p.oa {
            crossovers.push(p.oa - t.oa);
        }
    }
    let ok = crossovers.is_empty() || (crossovers.len() == 1 && crossovers[0] < 0.005);
    println!("{}: crossovers {crossovers:?} {}", ds.name, if ok { "PASS" } else { "FAIL" });
    assert!(ok);
}

#[test]
#[ignore = "needs the converted Indian Pines dataset"]
fn acceptance_indian_pines_table() {
    table_check(&INDIAN_PINES);
}

#[test]
#[ignore = "needs the converted Pavia University dataset"]
fn acceptance_pavia_table() {
    table_check(&PAVIA);
}

#[test]
#[ignore = "needs both converted datasets"]
fn acceptance_sweep_curves() {
    curve_check(&INDIAN_PINES);
    curve_check(&PAVIA);
}
