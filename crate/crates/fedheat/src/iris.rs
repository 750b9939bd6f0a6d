//! The canonical 150-row Iris table, vendored.

use std::path::Path;

use fedheat_core::Matrix;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const IRIS_CSV: &str = include_str!("../data/iris.csv");
/// SHA-256 of `data/iris.csv`.
pub const IRIS_SHA256: &str = "9cc1c345c71bcc9b486b74cbf6063fa66f4bb5e0f603a4b3c3471ec2e5e8e355";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Features (150 × 4) and species indices in order of first appearance.
/// A replacement file must hash to the vendored checksum.
pub fn load(path: Option<&Path>) -> CliResult<(Matrix, Vec<usize>)> {
    let owned;
    let src = match path {
        Some(p) => {
            owned = crate::dataset_io::read_file(p)?;
            owned.as_str()
        }
        None => IRIS_CSV,
    };
    let digest = sha256_hex(src.as_bytes());
    if digest != IRIS_SHA256 {
        return Err(CliError::validation(anyhow::anyhow!(
            "Iris table checksum {digest} does not match the canonical {IRIS_SHA256}"
        )));
    }
    parse(src)
}

fn parse(src: &str) -> CliResult<(Matrix, Vec<usize>)> {
    let mut names: Vec<&str> = Vec::new();
    let mut data = Vec::with_capacity(600);
    let mut species = Vec::with_capacity(150);
    for (i, line) in src.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(CliError::validation(anyhow::anyhow!("Iris line {}: expected 5 fields", i + 1)));
        }
        for x in &f[..4] {
            data.push(x.parse::<f64>().map_err(|_| CliError::validation(anyhow::anyhow!("Iris line {}: bad number", i + 1)))?);
        }
        let k = match names.iter().position(|n| *n == f[4]) {
            Some(k) => k,
            None => {
                names.push(f[4]);
                names.len() - 1
            }
        };
        species.push(k);
    }
    let n = species.len();
    Ok((Matrix::from_vec(n, 4, data)?, species))
}
