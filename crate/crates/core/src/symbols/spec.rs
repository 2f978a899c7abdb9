//! Symbol specs as they appear in config files.
//!
//! ```text
//! symbol = qh(twist=(1,-1), radial="r1^2*exp(-r2)" [, sup=2.5])
//! symbol = sum(box=[(0,0),(2,2)), terms=((0,0): "1", (1,1): "r1*r2"))
//! symbol = linf("z1 + conj(z2)*abs(z1)^2" [, pmax=(2,2)] [, sup=3])
//! ```
//!
//! Radial expressions use `r1..rn`, bounded-symbol expressions `z1..zn`.
//! When `sup` is omitted it is estimated from a deterministic sample of the
//! domain (times a safety factor) and the spot check is skipped.

use num_complex::Complex64;

use crate::domain::DomainProfile;
use crate::lattice::{IndexBox, MultiIndex};

use super::expr::Expr;
use super::{sample_points, QhSymbol, RadialFn, SlicedSymbol, SymbolError, SymbolSum};

#[derive(Clone, Debug, PartialEq)]
pub enum SymbolSpec {
    Qh {
        twist: Vec<i64>,
        radial: String,
        sup: Option<f64>,
    },
    Sum {
        lower: Vec<i64>,
        upper: Vec<i64>,
        terms: Vec<(Vec<i64>, String)>,
    },
    Linf {
        source: String,
        p_max: Option<Vec<i64>>,
        sup: Option<f64>,
    },
}

impl SymbolSpec {
    pub fn parse(s: &str) -> Result<Self, SymbolError> {
        let s = s.trim();
        let (name, args) = split_call(s)
            .ok_or_else(|| SymbolError::Spec(format!("expected qh(...), sum(...) or linf(...), got '{s}'")))?;
        match name {
            "qh" => parse_qh(args),
            "sum" => parse_sum(args),
            "linf" => parse_linf(args),
            other => Err(SymbolError::Spec(format!(
                "unknown symbol kind '{other}' (expected qh, sum, linf)"
            ))),
        }
    }

    pub fn is_linf(&self) -> bool {
        matches!(self, SymbolSpec::Linf { .. })
    }

    /// Build a `SymbolSum` (qh builds a singleton). Errors for linf specs.
    pub fn build_sum(&self, dim: usize, domain: &DomainProfile) -> Result<SymbolSum, SymbolError> {
        match self {
            SymbolSpec::Qh { twist, radial, sup } => {
                if twist.len() != dim {
                    return Err(SymbolError::Spec(format!(
                        "twist {:?} has dimension {}, context wants {dim}",
                        twist,
                        twist.len()
                    )));
                }
                let f = RadialFn::parse(radial, dim)?;
                let sup = match sup {
                    Some(s) => {
                        let sym = QhSymbol::new(f.clone(), MultiIndex::new(twist.clone()), *s);
                        sym.validate_on(domain)?;
                        *s
                    }
                    None => estimate_radial_sup(&f, domain),
                };
                Ok(SymbolSum::from_qh(QhSymbol::new(
                    f,
                    MultiIndex::new(twist.clone()),
                    sup,
                )))
            }
            SymbolSpec::Sum {
                lower,
                upper,
                terms,
            } => {
                if lower.len() != dim || upper.len() != dim {
                    return Err(SymbolError::Spec(format!(
                        "box dimension {} does not match context {dim}",
                        lower.len()
                    )));
                }
                let index_box = IndexBox::new(
                    MultiIndex::new(lower.clone()),
                    MultiIndex::new(upper.clone()),
                );
                let mut sum = SymbolSum::new(index_box);
                for (twist, radial) in terms {
                    if twist.len() != dim {
                        return Err(SymbolError::Spec(format!(
                            "term twist {twist:?} has wrong dimension"
                        )));
                    }
                    let f = RadialFn::parse(radial, dim)?;
                    let sup = estimate_radial_sup(&f, domain);
                    sum.insert(QhSymbol::new(f, MultiIndex::new(twist.clone()), sup))?;
                }
                Ok(sum)
            }
            SymbolSpec::Linf { .. } => Err(SymbolError::Spec(
                "linf symbols must be built with build_sliced".into(),
            )),
        }
    }

    /// Build a `SlicedSymbol` from a linf spec.
    pub fn build_sliced(
        &self,
        dim: usize,
        domain: &DomainProfile,
        default_p_max: i64,
    ) -> Result<SlicedSymbol, SymbolError> {
        let SymbolSpec::Linf { source, p_max, sup } = self else {
            return Err(SymbolError::Spec(
                "only linf specs build sliced symbols".into(),
            ));
        };
        let e = Expr::parse(source, 'z', dim)?;
        let p_max = match p_max {
            Some(p) => {
                if p.len() != dim || p.iter().any(|v| *v < 0) {
                    return Err(SymbolError::Spec(format!("bad pmax {p:?}")));
                }
                MultiIndex::new(p.clone())
            }
            None => MultiIndex::new(vec![default_p_max; dim]),
        };
        let expr = e.clone();
        let eval = move |r: &[f64], th: &[f64]| -> Complex64 {
            let z: Vec<Complex64> = r
                .iter()
                .zip(th)
                .map(|(rj, tj)| Complex64::from_polar(*rj, *tj))
                .collect();
            expr.eval(&z)
        };
        let sup = match sup {
            Some(s) => *s,
            None => estimate_symbol_sup(&eval, domain),
        };
        Ok(SlicedSymbol::new(eval, sup, p_max, source.clone()))
    }
}

fn estimate_radial_sup(f: &RadialFn, domain: &DomainProfile) -> f64 {
    let mut sup = 0.0f64;
    for r in sample_points(domain, 256) {
        sup = sup.max(f.eval(&r).norm());
    }
    sup * (1.0 + 1e-6) + 1e-12
}

fn estimate_symbol_sup(
    f: &dyn Fn(&[f64], &[f64]) -> Complex64,
    domain: &DomainProfile,
) -> f64 {
    let mut sup = 0.0f64;
    let grid = 12usize;
    let tau = 2.0 * std::f64::consts::PI;
    for r in sample_points(domain, 64) {
        let n = r.len();
        let mut idx = vec![0usize; n];
        loop {
            let theta: Vec<f64> = idx.iter().map(|i| tau * *i as f64 / grid as f64).collect();
            sup = sup.max(f(&r, &theta).norm());
            let mut j = 0;
            loop {
                if j == n {
                    break;
                }
                idx[j] += 1;
                if idx[j] < grid {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if idx.iter().all(|i| *i == 0) {
                break;
            }
        }
    }
    sup * (1.0 + 1e-6) + 1e-12
}

fn parse_qh(args: &str) -> Result<SymbolSpec, SymbolError> {
    let mut twist = None;
    let mut radial = None;
    let mut sup = None;
    for part in split_top_level(args) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| SymbolError::Spec(format!("expected key=value, got '{part}'")))?;
        match key.trim() {
            "twist" => twist = Some(parse_i64_tuple(value.trim())?),
            "radial" => radial = Some(unquote(value.trim()).to_string()),
            "sup" => {
                sup = Some(value.trim().parse::<f64>().map_err(|e| {
                    SymbolError::Spec(format!("bad sup '{}': {e}", value.trim()))
                })?)
            }
            other => return Err(SymbolError::Spec(format!("unknown qh key '{other}'"))),
        }
    }
    Ok(SymbolSpec::Qh {
        twist: twist.ok_or_else(|| SymbolError::Spec("qh needs twist=(...)".into()))?,
        radial: radial.ok_or_else(|| SymbolError::Spec("qh needs radial=\"...\"".into()))?,
        sup,
    })
}

fn parse_sum(args: &str) -> Result<SymbolSpec, SymbolError> {
    let mut bounds = None;
    let mut terms = Vec::new();
    for part in split_top_level(args) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| SymbolError::Spec(format!("expected key=value, got '{part}'")))?;
        match key.trim() {
            "box" => {
                // [(a1,...,an),(b1,...,bn)) with tolerant closers; strip one
                // outer bracket pair only
                let v = value.trim();
                let v = v
                    .strip_prefix('[')
                    .or_else(|| v.strip_prefix('('))
                    .unwrap_or(v);
                let inner = v
                    .strip_suffix(')')
                    .or_else(|| v.strip_suffix(']'))
                    .unwrap_or(v);
                let tuples = split_top_level(inner);
                if tuples.len() != 2 {
                    return Err(SymbolError::Spec(format!(
                        "box wants two corner tuples, got '{value}'"
                    )));
                }
                bounds = Some((parse_i64_tuple(tuples[0])?, parse_i64_tuple(tuples[1])?));
            }
            "terms" => {
                let inner = value
                    .trim()
                    .strip_prefix('(')
                    .and_then(|v| v.strip_suffix(')'))
                    .ok_or_else(|| SymbolError::Spec("terms wants ((k): \"expr\", ...)".into()))?;
                for entry in split_top_level(inner) {
                    if entry.is_empty() {
                        continue;
                    }
                    let (k, e) = entry.split_once(':').ok_or_else(|| {
                        SymbolError::Spec(format!("term entry wants (k): \"expr\", got '{entry}'"))
                    })?;
                    terms.push((parse_i64_tuple(k.trim())?, unquote(e.trim()).to_string()));
                }
            }
            other => return Err(SymbolError::Spec(format!("unknown sum key '{other}'"))),
        }
    }
    let (lower, upper) =
        bounds.ok_or_else(|| SymbolError::Spec("sum needs box=[(a),(b))".into()))?;
    Ok(SymbolSpec::Sum {
        lower,
        upper,
        terms,
    })
}

fn parse_linf(args: &str) -> Result<SymbolSpec, SymbolError> {
    let mut source = None;
    let mut p_max = None;
    let mut sup = None;
    for part in split_top_level(args) {
        if let Some((key, value)) = part.split_once('=') {
            match key.trim() {
                "pmax" => p_max = Some(parse_i64_tuple(value.trim())?),
                "sup" => {
                    sup = Some(value.trim().parse::<f64>().map_err(|e| {
                        SymbolError::Spec(format!("bad sup '{}': {e}", value.trim()))
                    })?)
                }
                other => return Err(SymbolError::Spec(format!("unknown linf key '{other}'"))),
            }
        } else {
            source = Some(unquote(part).to_string());
        }
    }
    Ok(SymbolSpec::Linf {
        source: source.ok_or_else(|| SymbolError::Spec("linf needs a quoted expression".into()))?,
        p_max,
        sup,
    })
}

fn split_call(s: &str) -> Option<(&str, &str)> {
    let open = s.find('(')?;
    if !s.ends_with(')') {
        return None;
    }
    Some((s[..open].trim(), &s[open + 1..s.len() - 1]))
}

fn unquote(s: &str) -> &str {
    s.trim().trim_matches('"')
}

fn parse_i64_tuple(s: &str) -> Result<Vec<i64>, SymbolError> {
    let inner = s
        .trim()
        .strip_prefix('(')
        .and_then(|v| v.strip_suffix(')'))
        .ok_or_else(|| SymbolError::Spec(format!("expected a tuple like (1,-1), got '{s}'")))?;
    inner
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.trim()
                .parse::<i64>()
                .map_err(|e| SymbolError::Spec(format!("bad integer '{}': {e}", p.trim())))
        })
        .collect()
}

/// Split on top-level commas (not inside parentheses, brackets or quotes).
fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut in_quote = false;
    let mut start = 0usize;
    for (i, ch) in s.char_indices() {
        match ch {
            '"' => in_quote = !in_quote,
            '(' | '[' if !in_quote => depth += 1,
            ')' | ']' if !in_quote => depth -= 1,
            ',' if depth == 0 && !in_quote => {
                let piece = s[start..i].trim();
                if !piece.is_empty() {
                    out.push(piece);
                }
                start = i + 1;
            }
            _ => {}
        }
    }
    let piece = s[start..].trim();
    if !piece.is_empty() {
        out.push(piece);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_qh() {
        let s = SymbolSpec::parse("qh(twist=(1,-1), radial=\"r1^2*exp(-r2)\")").unwrap();
        assert_eq!(
            s,
            SymbolSpec::Qh {
                twist: vec![1, -1],
                radial: "r1^2*exp(-r2)".into(),
                sup: None
            }
        );
        let d = DomainProfile::polydisk(vec![1.0, 1.0]);
        let sum = s.build_sum(2, &d).unwrap();
        assert_eq!(sum.term_count(), 1);
    }

    #[test]
    fn parses_sum() {
        let s =
            SymbolSpec::parse("sum(box=[(0,0),(2,2)), terms=((0,0): \"1\", (1,1): \"r1*r2\"))")
                .unwrap();
        let SymbolSpec::Sum {
            lower,
            upper,
            terms,
        } = &s
        else {
            panic!()
        };
        assert_eq!(lower, &vec![0, 0]);
        assert_eq!(upper, &vec![2, 2]);
        assert_eq!(terms.len(), 2);
        let d = DomainProfile::polydisk(vec![1.0, 1.0]);
        let sum = s.build_sum(2, &d).unwrap();
        assert_eq!(sum.term_count(), 2);
    }

    #[test]
    fn parses_linf() {
        let s = SymbolSpec::parse("linf(\"z1 + conj(z2)*abs(z1)^2\", pmax=(2,2))").unwrap();
        assert!(s.is_linf());
        let d = DomainProfile::polydisk(vec![1.0, 1.0]);
        let sliced = s.build_sliced(2, &d, 2).unwrap();
        assert_eq!(sliced.p_max().entries(), &[2, 2]);
        // z1 has the single slice f_(1,0) = r1
        let v = sliced.slice_value(&MultiIndex::new(vec![1, 0]), &[0.5, 0.3]);
        assert!((v.re - 0.5).abs() < 1e-10, "got {v}");
    }

    #[test]
    fn rejects_malformed_specs() {
        assert!(SymbolSpec::parse("qh(radial=\"r1\")").is_err());
        assert!(SymbolSpec::parse("blob(1)").is_err());
        assert!(SymbolSpec::parse("qh(twist=(1), radial=\"r9\")")
            .unwrap()
            .build_sum(1, &DomainProfile::polydisk(vec![1.0]))
            .is_err());
    }
}
