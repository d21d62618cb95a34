use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{json, Map, Value};

use irvision::metrics::{entropy, mse, psnr_from_mse, psnr_var, MetricError};
use irvision::pnm::{decode_pnm, PnmImage};
use irvision::Gray8Image;

use crate::output::{invalid, json_text};

fn load(path: &Path) -> Result<PnmImage> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    decode_pnm(&bytes).with_context(|| format!("cannot parse {}", path.display()))
}

/// RGB samples are measured as one long gray plane.
fn samples(img: PnmImage) -> Gray8Image {
    match img {
        PnmImage::Gray(g) => g,
        PnmImage::Rgb(c) => Gray8Image::new(c.width() * 3, c.height(), c.pixels().to_vec()).expect("same sample count"),
    }
}

fn put(map: &mut Map<String, Value>, key: &str, value: Result<f64, MetricError>) {
    match value {
        Ok(v) => {
            map.insert(key.into(), json!(v));
        }
        Err(e) => {
            map.insert(key.into(), Value::Null);
            map.insert(format!("{key}_reason"), json!(e.reason()));
        }
    }
}

pub fn report(reference: PnmImage, test: PnmImage) -> Result<Value> {
    if reference.kind() != test.kind() {
        return Err(invalid(format!("type mismatch: {} reference vs {} test", reference.kind(), test.kind())));
    }
    if (reference.width(), reference.height()) != (test.width(), test.height()) {
        return Err(invalid(format!(
            "dimension mismatch: {}x{} vs {}x{}",
            reference.width(),
            reference.height(),
            test.width(),
            test.height()
        )));
    }
    let (r, t) = (samples(reference), samples(test));
    let m = mse::<f64>(&r, &t).map_err(|e| invalid(e.to_string()))?;
    let mut map = Map::new();
    map.insert("entropy_ref".into(), json!(entropy::<f64>(&r)));
    map.insert("entropy_test".into(), json!(entropy::<f64>(&t)));
    map.insert("mse".into(), json!(m));
    put(&mut map, "psnr_db", psnr_from_mse(m));
    put(&mut map, "psnr_var_ref_db", psnr_var(&r));
    put(&mut map, "psnr_var_test_db", psnr_var(&t));
    Ok(Value::Object(map))
}

pub fn run(reference: &Path, test: &Path) -> Result<()> {
    let v = report(load(reference)?, load(test)?)?;
    print!("{}", json_text(&v));
    Ok(())
}
