//! Text format:
//!
//! ```text
//! par-mlp v1
//! layers 2
//! layer 3 4 relu
//! <12 row-major weights>
//! <4 biases>
//! layer 4 1 sigmoid
//! ...
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::{Activation, Layer, MlpModel};
use crate::error::{io_err, Error, Result};

const MAGIC: &str = "par-mlp v1";

fn floats(line: Option<&str>, expected: usize) -> Result<Vec<f64>> {
    let line = line.ok_or_else(|| Error::Parse("truncated model text".into()))?;
    let vals = line
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| Error::Parse(format!("bad float `{t}`"))))
        .collect::<Result<Vec<_>>>()?;
    if vals.len() != expected {
        return Err(Error::Dimension { expected, got: vals.len() });
    }
    Ok(vals)
}

impl MlpModel {
    pub fn to_text(&self) -> String {
        let mut out = format!("{MAGIC}\nlayers {}\n", self.layers.len());
        for l in &self.layers {
            writeln!(out, "layer {} {} {}", l.inputs, l.outputs, l.activation.name()).unwrap();
            let w: Vec<String> = l.weights.iter().map(|v| format!("{v:?}")).collect();
            let b: Vec<String> = l.bias.iter().map(|v| format!("{v:?}")).collect();
            writeln!(out, "{}\n{}", w.join(" "), b.join(" ")).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(MAGIC) {
            return Err(Error::Parse(format!("expected `{MAGIC}` header")));
        }
        let count: usize = lines
            .next()
            .and_then(|l| l.strip_prefix("layers "))
            .and_then(|n| n.trim().parse().ok())
            .ok_or_else(|| Error::Parse("missing `layers` line".into()))?;
        let mut layers = Vec::with_capacity(count);
        for _ in 0..count {
            let head: Vec<&str> = lines.next().unwrap_or("").split_whitespace().collect();
            let [tag, i, o, act] = head[..] else {
                return Err(Error::Parse("malformed layer header".into()));
            };
            if tag != "layer" {
                return Err(Error::Parse(format!("expected `layer`, found `{tag}`")));
            }
            let parse = |t: &str| t.parse::<usize>().map_err(|_| Error::Parse(format!("bad dimension `{t}`")));
            let (inputs, outputs) = (parse(i)?, parse(o)?);
            let activation = match act {
                "relu" => Activation::Relu,
                "identity" => Activation::Identity,
                "sigmoid" => Activation::Sigmoid,
                other => return Err(Error::Parse(format!("unknown activation `{other}`"))),
            };
            let weights = floats(lines.next(), inputs * outputs)?;
            let bias = floats(lines.next(), outputs)?;
            layers.push(Layer { inputs, outputs, weights, bias, activation });
        }
        MlpModel::new(layers)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(io_err(path))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_text(&std::fs::read_to_string(path).map_err(io_err(path))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = MlpModel::random(&[5, 7, 3, 1], Activation::Relu, Activation::Sigmoid, &mut rng);
        assert_eq!(MlpModel::from_text(&m.to_text()).unwrap(), m);
        assert!(MlpModel::from_text("par-mlp v2\n").is_err());
    }
}
