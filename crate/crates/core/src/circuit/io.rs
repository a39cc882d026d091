//! Versioned text format, one node per line in topological order:
//!
//! ```text
//! par-circuit v1
//! cards 2 3
//! root 4
//! 0 leaf 0 0 0.25 0.75
//! 1 leaf 1 1 0.2 0.3 0.5
//! 2 product 0,1 0 1
//! ...
//! 4 sum 0,1 2:0.4 3:0.6
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so parsing restores
//! every parameter bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use super::{Circuit, Node};
use crate::error::{io_err, Error, Result};

const MAGIC: &str = "par-circuit v1";

fn join<T: std::fmt::Display>(items: impl IntoIterator<Item = T>, sep: &str) -> String {
    items.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(sep)
}

fn parse<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse::<T>()
        .map_err(|_| Error::Parse(format!("line {line}: cannot parse `{tok}`")))
}

impl Circuit {
    pub fn to_text(&self) -> String {
        let scopes = self.scopes();
        let mut out = String::new();
        writeln!(out, "{MAGIC}").unwrap();
        writeln!(out, "cards {}", join(&self.cards, " ")).unwrap();
        writeln!(out, "root {}", self.root).unwrap();
        for (id, node) in self.nodes.iter().enumerate() {
            let scope = join(&scopes[id], ",");
            match node {
                Node::Leaf { feature, probs } => {
                    let theta = join(probs.iter().map(|p| format!("{p:?}")), " ");
                    writeln!(out, "{id} leaf {scope} {feature} {theta}").unwrap();
                }
                Node::Sum { children, weights } => {
                    let pairs = join(children.iter().zip(weights).map(|(c, w)| format!("{c}:{w:?}")), " ");
                    writeln!(out, "{id} sum {scope} {pairs}").unwrap();
                }
                Node::Product { children } => {
                    writeln!(out, "{id} product {scope} {}", join(children, " ")).unwrap();
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, magic) = lines.next().ok_or(Error::Empty("circuit text"))?;
        if magic.trim() != MAGIC {
            return Err(Error::Parse(format!("expected `{MAGIC}` header, found `{magic}`")));
        }
        let mut cards = None;
        let mut root = None;
        let mut nodes = Vec::new();
        let mut declared_scopes = Vec::new();
        for (i, line) in lines {
            let n = i + 1;
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks[0] {
                "cards" => cards = Some(toks[1..].iter().map(|t| parse(t, n)).collect::<Result<Vec<usize>>>()?),
                "root" => root = Some(parse::<usize>(toks.get(1).copied().unwrap_or(""), n)?),
                _ => {
                    if toks.len() < 3 {
                        return Err(Error::Parse(format!("line {n}: truncated node")));
                    }
                    let id: usize = parse(toks[0], n)?;
                    if id != nodes.len() {
                        return Err(Error::Parse(format!("line {n}: node ids must be consecutive")));
                    }
                    let scope: Vec<usize> = toks[2].split(',').map(|t| parse(t, n)).collect::<Result<_>>()?;
                    let rest = &toks[3..];
                    let node = match toks[1] {
                        "leaf" => {
                            let feature = parse(rest.first().copied().unwrap_or(""), n)?;
                            let probs = rest[1..].iter().map(|t| parse(t, n)).collect::<Result<_>>()?;
                            Node::Leaf { feature, probs }
                        }
                        "sum" => {
                            let mut children = Vec::new();
                            let mut weights = Vec::new();
                            for t in rest {
                                let (c, w) = t
                                    .split_once(':')
                                    .ok_or_else(|| Error::Parse(format!("line {n}: expected child:weight, got `{t}`")))?;
                                children.push(parse(c, n)?);
                                weights.push(parse(w, n)?);
                            }
                            Node::Sum { children, weights }
                        }
                        "product" => Node::Product { children: rest.iter().map(|t| parse(t, n)).collect::<Result<_>>()? },
                        other => return Err(Error::Parse(format!("line {n}: unknown node kind `{other}`"))),
                    };
                    nodes.push(node);
                    declared_scopes.push(scope);
                }
            }
        }
        let cards = cards.ok_or_else(|| Error::Parse("missing `cards` line".into()))?;
        let root = root.ok_or_else(|| Error::Parse("missing `root` line".into()))?;
        let circuit = Circuit::new(nodes, root, cards)?;
        for (id, (declared, actual)) in declared_scopes.iter().zip(circuit.scopes()).enumerate() {
            if !declared.iter().copied().eq(actual.iter().copied()) {
                return Err(Error::Parse(format!("node {id}: declared scope does not match its children")));
            }
        }
        Ok(circuit)
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
    use crate::circuit::random_circuit;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #[test]
        fn text_round_trip_is_exact(seed in any::<u64>(), d in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cards: Vec<usize> = (0..d).map(|i| 2 + (seed as usize + i) % 3).collect();
            let c = random_circuit(&cards, 3, &mut rng);
            let back = Circuit::from_text(&c.to_text()).unwrap();
            prop_assert_eq!(back, c);
        }
    }

    #[test]
    fn rejects_bad_header_and_scope_mismatch() {
        assert!(Circuit::from_text("nope\n").is_err());
        let text = "par-circuit v1\ncards 2\nroot 0\n0 leaf 1 0 0.5 0.5\n";
        assert!(Circuit::from_text(text).is_err());
        let ok = "par-circuit v1\ncards 2\nroot 0\n0 leaf 0 0 0.5 0.5\n";
        assert!(Circuit::from_text(ok).is_ok());
    }
}
