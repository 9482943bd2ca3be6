//! Text format for bond fields.
//!
//! ```text
//! d=2
//! T=2
//! V=(1,0),(0,1)
//! alpha=1,1
//! beta=3,5/2
//! 10
//! 00
//!
//! 11
//! 00
//! ```
//!
//! One block per direction, in the order of `V`. Each block lists the
//! labels of one period cell (`0` = alpha, `1` = beta), one line per row of
//! `T` sites with the first coordinate varying fastest. Windowed fields
//! replace `T=` by `window=(lo),(hi)` and add `outside=0|1`; rows then have
//! the window's first extent.

use std::fmt::Write as _;

use num_traits::Zero;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lattice::{ivec, BondField, BoxWindow, IVec, InteractionSet, Label, Strength};

fn vector_text(v: &IVec, dim: usize) -> String {
    let parts: Vec<String> = v[..dim].iter().map(|c| c.to_string()).collect();
    format!("({})", parts.join(","))
}

fn list_text(values: &[Strength]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// Serializes a field; the output parses back to an identical field.
pub fn write_field(field: &BondField) -> String {
    let set = field.set();
    let dim = set.dim();
    let mut out = String::new();
    let _ = writeln!(out, "d={dim}");
    let row = match (field.period(), field.window()) {
        (Some(t), _) => {
            let _ = writeln!(out, "T={t}");
            t
        }
        (None, Some(w)) => {
            let _ = writeln!(out, "window={},{}", vector_text(&w.lo, dim), vector_text(&w.hi, dim));
            w.extent(0)
        }
        (None, None) => unreachable!("a field is periodic or windowed"),
    };
    if let Some(outside) = field.outside_label() {
        let _ = writeln!(out, "outside={outside}");
    }
    let dirs: Vec<String> = set.directions().iter().map(|v| vector_text(v, dim)).collect();
    let _ = writeln!(out, "V={}", dirs.join(","));
    let _ = writeln!(out, "alpha={}", list_text(set.alphas()));
    let _ = writeln!(out, "beta={}", list_text(set.betas()));
    for (k, block) in field.label_blocks().iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        for chunk in block.chunks(row.max(1)) {
            for l in chunk {
                let _ = write!(out, "{l}");
            }
            out.push('\n');
        }
    }
    out
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Parses an exact rational from `p/q`, an integer, or a decimal literal.
pub fn parse_rational(text: &str) -> std::result::Result<Strength, String> {
    let t = text.trim();
    if let Some((p, q)) = t.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| format!("bad numerator in {t:?}"))?;
        let q: i64 = q.trim().parse().map_err(|_| format!("bad denominator in {t:?}"))?;
        if q == 0 {
            return Err(format!("zero denominator in {t:?}"));
        }
        return Ok(Strength::new(p, q));
    }
    if let Ok(n) = t.parse::<i64>() {
        return Ok(Strength::from_integer(n));
    }
    let (mantissa, exp) = match t.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| format!("bad exponent in {t:?}"))?),
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(format!("not a number: {t:?}"));
    }
    let numer: i64 = format!("{int}{frac}")
        .parse()
        .map_err(|_| format!("too many digits in {t:?}"))?;
    let scale = exp - frac.len() as i32;
    let pow = |e: i32| 10i64.checked_pow(e as u32).ok_or_else(|| format!("exponent out of range in {t:?}"));
    let mut value = if scale >= 0 {
        Strength::from_integer(numer.checked_mul(pow(scale)?).ok_or_else(|| format!("overflow in {t:?}"))?)
    } else {
        Strength::new(numer, pow(-scale)?)
    };
    if neg {
        value = -value;
    }
    Ok(value)
}

fn parse_vector_list(text: &str, line: usize) -> Result<Vec<Vec<i64>>> {
    let mut out = Vec::new();
    let mut rest = text.trim();
    while !rest.is_empty() {
        let open = rest.strip_prefix('(').ok_or_else(|| perr(line, format!("expected '(' in {text:?}")))?;
        let close = open.find(')').ok_or_else(|| perr(line, format!("unclosed vector in {text:?}")))?;
        let coords = open[..close]
            .split(',')
            .map(|c| c.trim().parse::<i64>().map_err(|_| perr(line, format!("bad integer {c:?}"))))
            .collect::<Result<Vec<_>>>()?;
        out.push(coords);
        rest = open[close + 1..].trim_start();
        rest = rest.strip_prefix(',').unwrap_or(rest).trim_start();
    }
    Ok(out)
}

/// Parses the field format written by [`write_field`].
pub fn read_field(text: &str) -> Result<BondField> {
    let mut dim = None;
    let mut period = None;
    let mut window = None;
    let mut outside = None;
    let mut dirs = None;
    let mut alpha = None;
    let mut beta = None;
    let mut bits: Vec<Label> = Vec::new();
    let mut first_bit_line = 0;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        if let Some((key, value)) = l.split_once('=') {
            if !bits.is_empty() {
                return Err(perr(line, "header line after label data"));
            }
            let value = value.trim();
            match key.trim() {
                "d" => dim = Some(value.parse::<usize>().map_err(|_| perr(line, "bad dimension"))?),
                "T" => period = Some(value.parse::<usize>().map_err(|_| perr(line, "bad period"))?),
                "window" => {
                    let v = parse_vector_list(value, line)?;
                    if v.len() != 2 || v[0].len() != v[1].len() {
                        return Err(perr(line, "window needs two vectors of equal length"));
                    }
                    window = Some((v[0].clone(), v[1].clone()));
                }
                "outside" => {
                    outside = Some(match value {
                        "0" => Label::Alpha,
                        "1" => Label::Beta,
                        _ => return Err(perr(line, "outside must be 0 or 1")),
                    })
                }
                "V" => dirs = Some(parse_vector_list(value, line)?),
                "alpha" | "beta" => {
                    let vals = value
                        .split(',')
                        .map(|x| parse_rational(x).map_err(|m| perr(line, m)))
                        .collect::<Result<Vec<_>>>()?;
                    if key.trim() == "alpha" {
                        alpha = Some(vals);
                    } else {
                        beta = Some(vals);
                    }
                }
                other => return Err(perr(line, format!("unknown key {other:?}"))),
            }
            continue;
        }
        if bits.is_empty() {
            first_bit_line = line;
        }
        for c in l.chars() {
            match c {
                '0' => bits.push(Label::Alpha),
                '1' => bits.push(Label::Beta),
                c if c.is_whitespace() => {}
                c => return Err(perr(line, format!("unexpected character {c:?} in label data"))),
            }
        }
    }
    let dim = dim.ok_or_else(|| perr(0, "missing d="))?;
    let dirs = dirs.ok_or_else(|| perr(0, "missing V="))?;
    let alpha = alpha.ok_or_else(|| perr(0, "missing alpha="))?;
    let beta = beta.ok_or_else(|| perr(0, "missing beta="))?;
    if dirs.iter().any(|v| v.len() != dim) {
        return Err(perr(0, format!("every direction needs {dim} coordinates")));
    }
    let set = InteractionSet::new(dim, dirs.iter().map(|v| ivec(v)).collect(), alpha, beta)?;
    let cell = match (period, &window) {
        (Some(t), None) => t.pow(dim as u32),
        (None, Some((lo, hi))) => {
            if lo.len() != dim {
                return Err(perr(0, "window dimension mismatch"));
            }
            BoxWindow::new(dim, ivec(lo), ivec(hi)).len()
        }
        _ => return Err(perr(0, "exactly one of T= and window= is required")),
    };
    if bits.len() != cell * set.len() {
        return Err(perr(
            first_bit_line,
            format!("expected {} labels, found {}", cell * set.len(), bits.len()),
        ));
    }
    let labels: Vec<Vec<Label>> = if cell.is_zero() {
        vec![Vec::new(); set.len()]
    } else {
        bits.chunks(cell).map(|c| c.to_vec()).collect()
    };
    match (period, window) {
        (Some(t), _) => BondField::periodic(set, t, labels),
        (None, Some((lo, hi))) => {
            let outside = outside.ok_or_else(|| perr(0, "windowed field needs outside="))?;
            BondField::windowed(set, BoxWindow::new(dim, ivec(&lo), ivec(&hi)), labels, outside)
        }
        (None, None) => unreachable!(),
    }
}

/// Hex SHA-256 of the canonical serialization.
pub fn field_digest(field: &BondField) -> String {
    let digest = Sha256::digest(write_field(field).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
