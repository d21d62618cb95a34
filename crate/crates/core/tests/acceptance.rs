//! End-to-end acceptance checks, one line per criterion.
//!
//! Runs without the libtest harness so the PASS/FAIL lines always reach the
//! console; exits non-zero if any criterion fails.

use std::time::Instant;

use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use irvision::calib::{calibrate, undistort, CameraIntrinsics, DistortionCoeffs, TargetGrid};
use irvision::classify::{evaluate, gradient_check, softmax, train, Condition, FeatureRecord, LinearClassifier, TrainConfig, CLASSES, FEATURE_DIM};
use irvision::enhance::{adaptive_equalize, adaptive_lut, clahe, clahe_tile_luts, clip_histogram, equalization_lut, equalize, AheParams, CdfNormalization, ClaheParams};
use irvision::metrics::{entropy, mse, psnr_from_mse, psnr_var};
use irvision::synth::{bulged_line_image, gaussian_features, line_straightness, random_poses, reference_distortion, reference_intrinsics, synthetic_views, FeatureFixture, PoseSampler};
use irvision::{Gray8Image, Histogram256};

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Gray8Image {
    // a random palette keeps some levels repeated and others missing
    let palette: Vec<u8> = (0..rng.random_range(1..40)).map(|_| rng.random()).collect();
    Gray8Image::from_fn(w, h, |_, _| palette[rng.random_range(0..palette.len())]).unwrap()
}

fn half_up(r: Rational64) -> u8 {
    let v = (r + Rational64::new(1, 2)).floor().to_integer();
    v.clamp(0, 255) as u8
}

/// Direct per-pixel evaluation of the equalization formula.
fn equalize_oracle(img: &Gray8Image) -> Vec<u8> {
    let px = img.pixels();
    let n = px.len() as i64;
    let cdf = |v: u8| px.iter().filter(|&&p| p <= v).count() as i64;
    let cdf_min = px.iter().map(|&p| cdf(p)).min().unwrap();
    px.iter()
        .map(|&p| half_up(Rational64::new((cdf(p) - cdf_min) * 255, n - 1)))
        .collect()
}

/// Direct per-pixel evaluation of the β-weighted mapping with exact β. The
/// second value flags pixels whose exact target lies exactly half-way between
/// two levels.
fn adaptive_oracle(img: &Gray8Image) -> (Vec<u8>, Vec<bool>) {
    let px = img.pixels();
    let band = |lo: u8, hi: u8| px.iter().filter(|&&p| lo <= p && p <= hi).count();
    let (low, mid, high) = (band(0, 85), band(86, 170), band(171, 255));
    let beta = if low >= mid && low >= high {
        Rational64::new(8, 10)
    } else if mid >= high {
        Rational64::new(11, 10)
    } else {
        Rational64::new(15, 10)
    };
    px.iter()
        .map(|&p| {
            let a = px.iter().filter(|&&q| q < p).count() as i64;
            let b = px.iter().filter(|&&q| q > p).count() as i64;
            if a == 0 && b == 0 {
                return (0, false);
            }
            let a = Rational64::from_integer(a);
            let target = a * 255 / (a + beta * b);
            (half_up(target), target.fract() == Rational64::new(1, 2))
        })
        .unzip()
}

fn criterion_1() -> Outcome {
    let rows = [(771.0, 19.259), (13713.0, 6.7592), (14177.0, 6.6146), (264.0, 23.9154)];
    let mut worst = 0.0f64;
    for (m, db) in rows {
        let got: f64 = psnr_from_mse(m).map_err(|e| e.to_string())?;
        worst = worst.max((got - db).abs());
        check((got - db).abs() <= 0.005, format!("mse {m}: {got:.5} dB vs {db}"))?;
    }
    Ok(format!("max |error| {worst:.5} dB"))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let (k, d) = (reference_intrinsics(), reference_distortion());
    let grid = TargetGrid::led_board(30.0);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let poses = random_poses(&mut rng, &k, &d, &grid, 5, &PoseSampler::default());
    let cal = calibrate(&synthetic_views(&k, &d, &poses, &grid)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let e = cal.intrinsics;
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    let worst_k = [rel(e.fx, k.fx), rel(e.fy, k.fy), rel(e.cx, k.cx), rel(e.cy, k.cy)]
        .into_iter()
        .fold(0.0, f64::max);
    let k1 = rel(cal.distortion.k1, d.k1);
    check(worst_k < 0.01, format!("intrinsics off by {:.3}%", worst_k * 100.0))?;
    check(k1 < 0.05, format!("k1 off by {:.3}%", k1 * 100.0))?;
    check(cal.mean_reprojection_error < 1e-4, format!("reprojection {:.3e} px", cal.mean_reprojection_error))?;
    check(elapsed < 10.0, format!("took {elapsed:.2} s"))?;
    Ok(format!(
        "intrinsics within {:.2e}, k1 within {:.2e}, reprojection {:.2e} px, {:.2} s",
        worst_k, k1, cal.mean_reprojection_error, elapsed
    ))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut float_tie_pixels = 0;
    for i in 0..200 {
        let img = random_image(&mut rng, 16, 16);
        let he = equalize(&img).map_err(|e| e.to_string())?;
        check(he.pixels() == equalize_oracle(&img).as_slice(), format!("equalize differs on image {i}"))?;
        let (expect, ties) = adaptive_oracle(&img);
        let exact = adaptive_equalize(&img, &AheParams::<Rational64>::default()).map_err(|e| e.to_string())?;
        check(exact.pixels() == expect.as_slice(), format!("adaptive (exact) differs on image {i}"))?;
        // binary floating point cannot hold 1.1 or 0.8, so only exact ties may round differently
        let float = adaptive_equalize(&img, &AheParams::<f64>::default()).map_err(|e| e.to_string())?;
        for ((&f, &e), &tie) in float.pixels().iter().zip(&expect).zip(&ties) {
            if f != e {
                check(tie && f.abs_diff(e) == 1, format!("adaptive (f64) differs off a tie on image {i}"))?;
                float_tie_pixels += 1;
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    check(elapsed < 5.0, format!("took {elapsed:.2} s"))?;
    Ok(format!(
        "200 images bit-identical with exact scalars (f64 β differs only on {float_tie_pixels} half-way-tie pixels), {elapsed:.2} s"
    ))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..50 {
        let (w, h) = (rng.random_range(32..80), rng.random_range(32..80));
        let img = random_image(&mut rng, w, h);
        let whole = clahe(&img, &ClaheParams::<f64>::unclipped(w, h)).map_err(|e| e.to_string())?;
        check(whole == equalize(&img).map_err(|e| e.to_string())?, format!("whole-tile CLAHE differs on image {i}"))?;
    }
    for level in [0u8, 1, 37, 128, 254, 255] {
        let img = Gray8Image::filled(70, 45, level).unwrap();
        let outs = [
            equalize(&img).map_err(|e| e.to_string())?,
            adaptive_equalize(&img, &AheParams::<f64>::default()).map_err(|e| e.to_string())?,
            clahe(&img, &ClaheParams::<f64>::default()).map_err(|e| e.to_string())?,
        ];
        for (name, out) in ["he", "ahe", "clahe"].iter().zip(&outs) {
            let v = out.pixels()[0];
            check(out.pixels().iter().all(|&p| p == v), format!("{name} of constant {level} is not constant"))?;
        }
    }
    Ok("whole-tile unclipped CLAHE == HE on 50 images; constant inputs stay constant under HE, AHE and CLAHE".into())
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let nondecreasing = |lut: &[u8]| lut.windows(2).all(|w| w[0] <= w[1]);
    for i in 0..300 {
        let mut counts = [0u64; 256];
        for _ in 0..rng.random_range(1..60) {
            counts[rng.random_range(0..256)] += rng.random_range(1..500);
        }
        let hist = Histogram256::from_counts(counts).unwrap();
        if hist.total() > 1 {
            for norm in [CdfNormalization::Total, CdfNormalization::Classical] {
                let lut = equalization_lut(&hist, norm).map_err(|e| e.to_string())?;
                check(nondecreasing(&lut), format!("HE mapping decreases on histogram {i}"))?;
            }
        }
        for beta in [Rational64::new(4, 5), Rational64::new(11, 10), Rational64::new(3, 2), Rational64::new(7, 3)] {
            let lut = adaptive_lut(&hist, beta, false).map_err(|e| e.to_string())?;
            let mapped: Vec<u8> = lut.into_iter().flatten().collect();
            check(nondecreasing(&mapped), format!("AHE mapping decreases on histogram {i}"))?;
        }
        let limit = rng.random_range(1..hist.total().max(2));
        let clipped = clip_histogram(&counts, limit);
        check(clipped.iter().sum::<u64>() == hist.total(), format!("clipping loses mass on histogram {i}"))?;
    }
    for i in 0..20 {
        let (w, h) = (rng.random_range(32..120), rng.random_range(32..120));
        let img = random_image(&mut rng, w, h);
        let params = ClaheParams::new(32, 32, rng.random_range(1.0..8.0));
        let (_, luts) = clahe_tile_luts(&img, &params).map_err(|e| e.to_string())?;
        check(luts.iter().all(|l| nondecreasing(l)), format!("CLAHE tile mapping decreases on image {i}"))?;
        // u8 output is in range by construction; the call must simply succeed
        clahe(&img, &params).map_err(|e| e.to_string())?;
    }
    Ok("300 histograms and 20 tiled images: mappings nondecreasing, clipping conserves mass".into())
}

fn criterion_6() -> Outcome {
    let uniform = Gray8Image::from_fn(64, 64, |x, y| ((y * 64 + x) % 256) as u8).unwrap();
    let e: f64 = entropy(&uniform);
    check(e == 8.0, format!("uniform entropy {e}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        let a = random_image(&mut rng, 23, 17);
        let b = random_image(&mut rng, 23, 17);
        let mut shuffled = a.pixels().to_vec();
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        let perm = Gray8Image::new(23, 17, shuffled).unwrap();
        check(entropy::<f64>(&a) == entropy::<f64>(&perm), "entropy changes under permutation")?;
        let (ab, ba): (f64, f64) = (mse(&a, &b).unwrap(), mse(&b, &a).unwrap());
        check(ab == ba, "mse not symmetric")?;
    }
    let two = Gray8Image::from_fn(10, 10, |x, _| if x < 5 { 0 } else { 255 }).unwrap();
    let got: f64 = psnr_var(&two).map_err(|e| e.to_string())?;
    let expect = 10.0 * (65025.0f64 / 16256.25).log10();
    check((got - expect).abs() < 1e-9, format!("two-point psnr_var {got}"))?;
    Ok(format!("entropy 8.0 exact, two-point psnr_var {got:.9} dB"))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let records: Vec<FeatureRecord<f64>> = (0..8)
        .map(|i| {
            let f = (0..FEATURE_DIM).map(|_| rng.random_range(-1.0..1.0)).collect();
            FeatureRecord::new(f, i % CLASSES, Condition::ALL[i % 4]).unwrap()
        })
        .collect();
    let w = (0..FEATURE_DIM * CLASSES).map(|_| rng.random_range(-0.05..0.05)).collect();
    let b = (0..CLASSES).map(|_| rng.random_range(-0.05..0.05)).collect();
    let model = LinearClassifier::from_parts(w, b).unwrap();
    let grad_err = gradient_check(&model, &records, 0.0, 100, 7).map_err(|e| e.to_string())?;
    check(grad_err < 1e-5, format!("gradient relative error {grad_err:.3e}"))?;

    for _ in 0..200 {
        let z: Vec<f64> = (0..CLASSES).map(|_| rng.random_range(-30.0..30.0)).collect();
        let shift = rng.random_range(-50.0..50.0);
        let p = softmax(&z);
        let q = softmax(&z.iter().map(|v| v + shift).collect::<Vec<_>>());
        check((p.iter().sum::<f64>() - 1.0).abs() < 1e-12, "softmax does not sum to 1")?;
        check(p.iter().zip(&q).all(|(a, b)| (a - b).abs() < 1e-12), "softmax not shift invariant")?;
    }

    let toy = gaussian_features(
        &mut ChaCha8Rng::seed_from_u64(70),
        &FeatureFixture {
            per_class: 20,
            ..FeatureFixture::default()
        },
    );
    let cfg = TrainConfig {
        seed: 11,
        ..TrainConfig::default()
    };
    let first = train(&toy, &cfg).map_err(|e| e.to_string())?;
    let acc = evaluate(&first.model, &toy).map_err(|e| e.to_string())?.overall;
    check(acc.correct == acc.total, format!("toy accuracy {}/{}", acc.correct, acc.total))?;
    let second = train(&toy, &cfg).map_err(|e| e.to_string())?;
    check(first.model == second.model, "same seed gave different models")?;

    let random: Vec<FeatureRecord<f64>> = (0..1000)
        .map(|i| {
            let f = (0..FEATURE_DIM).map(|_| rng.random_range(-1.0..1.0)).collect();
            FeatureRecord::new(f, rng.random_range(0..CLASSES), Condition::ALL[i % 4]).unwrap()
        })
        .collect();
    let w = (0..FEATURE_DIM * CLASSES).map(|_| rng.random_range(-0.01..0.01)).collect();
    let untrained = LinearClassifier::from_parts(w, vec![0.0; CLASSES]).unwrap();
    let chance = evaluate(&untrained, &random).map_err(|e| e.to_string())?.overall.accuracy;
    check((0.14..=0.26).contains(&chance), format!("chance accuracy {chance}"))?;
    Ok(format!(
        "gradient error {grad_err:.2e}, toy accuracy 100% in {} epochs, deterministic, chance accuracy {:.1}%",
        cfg.epochs,
        chance * 100.0
    ))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let img = random_image(&mut rng, 160, 120);
    let k = CameraIntrinsics::new(150.2, 149.7, 79.3, 61.8);
    check(undistort(&img, &k, &DistortionCoeffs::zero()) == img, "zero-coefficient undistort changed the image")?;

    let centered = CameraIntrinsics::new(150.0, 150.0, 80.0, 60.0);
    let out = undistort(&img, &centered, &reference_distortion());
    check(out.get(80, 60) == img.get(80, 60), "principal-point pixel changed")?;

    let (k, d) = (reference_intrinsics(), reference_distortion());
    let bent = bulged_line_image(&k, &d, 1024, 768, 160.0);
    let before = line_straightness(&bent, 120..900, 60..340).ok_or("line not found")?;
    let after = line_straightness(&undistort(&bent, &k, &d), 120..900, 60..340).ok_or("line not found")?;
    check(before >= 10.0 * after, format!("straightness {before:.3} -> {after:.3} px"))?;
    Ok(format!("identity exact, principal point fixed, straightness {before:.2} -> {after:.3} px ({:.0}x)", before / after))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("PSNR from tabulated MSE", criterion_1),
        ("calibration recovery", criterion_2),
        ("enhancement oracle equivalence", criterion_3),
        ("CLAHE degenerate equivalence", criterion_4),
        ("monotonicity and range", criterion_5),
        ("metric identities", criterion_6),
        ("classifier correctness", criterion_7),
        ("undistortion", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
