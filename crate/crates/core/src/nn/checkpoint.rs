//! Text checkpoint for the dynamics network and its optimizer.
//!
//! ```text
//! r3l-mlp 1
//! dims <input> <hidden> <target>
//! params <n>
//! <n values, one per line, row-major in the network's flat layout>
//! adam <step> <learning_rate> <beta1> <beta2> <epsilon>
//! first <n>
//! <n values>
//! second <n>
//! <n values>
//! ```
//!
//! Values use Rust's shortest round-trip float formatting, so a save/load
//! cycle is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use super::{AdamState, Mlp};
use crate::error::{Error, Result};

const MAGIC: &str = "r3l-mlp 1";

pub fn write_checkpoint(net: &Mlp, adam: &AdamState) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "dims {} {} {}", net.input_dim(), net.hidden_dim(), net.target_dim());
    let section = |out: &mut String, name: &str, values: &[f64]| {
        let _ = writeln!(out, "{name} {}", values.len());
        for v in values {
            let _ = writeln!(out, "{v:?}");
        }
    };
    section(&mut out, "params", net.params());
    let _ = writeln!(
        out,
        "adam {} {:?} {:?} {:?} {:?}",
        adam.step, adam.learning_rate, adam.beta1, adam.beta2, adam.epsilon
    );
    section(&mut out, "first", &adam.first);
    section(&mut out, "second", &adam.second);
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    origin: &'a str,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<(usize, &'a str)> {
        self.inner.next().map(|(i, l)| (i + 1, l.trim())).ok_or_else(|| Error::Parse {
            origin: self.origin.into(),
            line: 0,
            message: "unexpected end of checkpoint".into(),
        })
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            origin: self.origin.into(),
            line,
            message: message.into(),
        }
    }

    fn header(&mut self, name: &str) -> Result<Vec<&'a str>> {
        let (n, line) = self.next_line()?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(name) {
            return Err(self.err(n, format!("expected `{name}` section")));
        }
        Ok(parts.collect())
    }

    fn number<T: std::str::FromStr>(&self, line: usize, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(line, format!("bad number `{s}`")))
    }

    fn section(&mut self, name: &str) -> Result<Vec<f64>> {
        let fields = self.header(name)?;
        let n: usize = self.number(0, fields.first().copied().unwrap_or(""))?;
        (0..n)
            .map(|_| {
                let (i, l) = self.next_line()?;
                self.number(i, l)
            })
            .collect()
    }
}

pub fn read_checkpoint(text: &str, origin: &str) -> Result<(Mlp, AdamState)> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        origin,
    };
    let (n, first) = lines.next_line()?;
    if first != MAGIC {
        return Err(lines.err(n, "not an r3l-mlp checkpoint"));
    }
    let dims = lines.header("dims")?;
    if dims.len() != 3 {
        return Err(lines.err(2, "dims needs three values"));
    }
    let d: Vec<usize> = dims.iter().map(|s| lines.number(2, s)).collect::<Result<_>>()?;
    let params = lines.section("params")?;
    let net = Mlp::from_parts(d[0], d[1], d[2], params)?;
    let adam_fields = lines.header("adam")?;
    if adam_fields.len() != 5 {
        return Err(lines.err(0, "adam needs five values"));
    }
    let mut adam = AdamState::with_learning_rate(net.params().len(), lines.number(0, adam_fields[1])?);
    adam.step = lines.number(0, adam_fields[0])?;
    adam.beta1 = lines.number(0, adam_fields[2])?;
    adam.beta2 = lines.number(0, adam_fields[3])?;
    adam.epsilon = lines.number(0, adam_fields[4])?;
    adam.first = lines.section("first")?;
    adam.second = lines.section("second")?;
    if adam.first.len() != adam.len() || adam.second.len() != adam.len() || adam.first.len() != net.params().len() {
        return Err(lines.err(0, "adam moment shapes do not match parameters"));
    }
    Ok((net, adam))
}

pub fn save_checkpoint(path: &Path, net: &Mlp, adam: &AdamState) -> Result<()> {
    std::fs::write(path, write_checkpoint(net, adam)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<(Mlp, AdamState)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&text, &path.display().to_string())
}
