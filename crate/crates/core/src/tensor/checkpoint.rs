//! Text checkpoint for a [`ParamStore`]:
//!
//! ```text
//! graphnotice-params v1
//! param <name> <rows> <cols>
//! <16-digit hex of each f64 bit pattern, one row per line>
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::nn::ParamStore;
use crate::tensor::Matrix;

const MAGIC: &str = "graphnotice-params v1";

pub fn encode(store: &ParamStore) -> String {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    for (name, m) in store.iter() {
        let _ = writeln!(out, "param {name} {} {}", m.rows(), m.cols());
        for r in 0..m.rows() {
            let row: Vec<String> = m.row(r).iter().map(|x| format!("{:016x}", x.to_bits())).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out
}

pub fn decode(text: &str, origin: &Path) -> Result<ParamStore> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l == MAGIC => {}
        _ => return Err(Error::parse(origin, 1, "missing checkpoint header")),
    }
    let mut store = ParamStore::new();
    while let Some((ln, line)) = lines.next() {
        let parts: Vec<&str> = line.split(' ').collect();
        if parts.len() != 4 || parts[0] != "param" {
            return Err(Error::parse(origin, ln + 1, "expected `param <name> <rows> <cols>`"));
        }
        let dim = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(origin, ln + 1, format!("bad dimension `{s}`")))
        };
        let (rows, cols) = (dim(parts[2])?, dim(parts[3])?);
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (rl, row) = lines
                .next()
                .ok_or_else(|| Error::parse(origin, ln + 1, "truncated parameter"))?;
            let vals: Vec<&str> = if cols == 0 { Vec::new() } else { row.split(' ').collect() };
            if vals.len() != cols {
                return Err(Error::parse(origin, rl + 1, format!("expected {cols} values")));
            }
            for v in vals {
                let bits = u64::from_str_radix(v, 16)
                    .map_err(|_| Error::parse(origin, rl + 1, format!("bad value `{v}`")))?;
                data.push(f64::from_bits(bits));
            }
        }
        store.add(parts[1], Matrix::from_vec(rows, cols, data)?);
    }
    Ok(store)
}

pub fn save(store: &ParamStore, path: &Path) -> Result<()> {
    crate::io::write_file(path, &encode(store))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<ParamStore> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    decode(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::DeterministicRng;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut store = ParamStore::new();
        let mut rng = DeterministicRng::new(4);
        store.add_glorot("a.w", 3, 5, &mut rng);
        store.add("b", Matrix::from_vec(1, 3, vec![-0.0, f64::MIN_POSITIVE, 1e300]).unwrap());
        store.add("empty", Matrix::zeros(2, 0));
        let text = encode(&store);
        let back = decode(&text, Path::new("mem")).unwrap();
        assert_eq!(encode(&back), text);
        assert_eq!(back.values()[1].as_slice()[0].to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn rejects_garbage() {
        assert!(decode("nope\n", Path::new("x")).is_err());
        assert!(decode(&format!("{MAGIC}\nparam w 1 2\n0\n"), Path::new("x")).is_err());
    }
}
