//! Real observables on phase space.
//!
//! Text syntax (indices are 1-based): `p1^2`, `q1q2`, `q1*p2`, `3*q2^2`,
//! `H` (total energy), `H2` (energy of particle 2), `1`, and sums or
//! differences of these such as `0.5*p1^2 + q1q2 - 2`.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::phase::{PhaseVector, QuadraticHamiltonian};

/// A coordinate factor of a monomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    Q(usize),
    P(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    /// `coef · Π factors`.
    Monomial { coef: f64, factors: Vec<Var> },
    /// `coef · H(ψ)`.
    Energy { coef: f64 },
    /// `coef · Hᵢ(ψ)` with `Hᵢ = pᵢ²/2 + ½Σⱼ Vᵢⱼqᵢqⱼ`, so that `Σᵢ Hᵢ = H`.
    ParticleEnergy { coef: f64, particle: usize },
}

/// A finite sum of terms together with its display label.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    label: String,
    terms: Vec<Term>,
}

impl Serialize for Observable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label)
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl Observable {
    pub fn new(label: impl Into<String>, terms: Vec<Term>) -> Self {
        Observable { label: label.into(), terms }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), vec![Term::Monomial { coef: c, factors: vec![] }])
    }

    /// `pᵢpⱼ` (0-based indices).
    pub fn pp(i: usize, j: usize) -> Self {
        Self::product(Var::P(i), Var::P(j))
    }

    /// `qᵢqⱼ` (0-based indices).
    pub fn qq(i: usize, j: usize) -> Self {
        Self::product(Var::Q(i), Var::Q(j))
    }

    /// `qᵢpⱼ` (0-based indices).
    pub fn qp(i: usize, j: usize) -> Self {
        Self::product(Var::Q(i), Var::P(j))
    }

    fn product(a: Var, b: Var) -> Self {
        let label = if a == b { format!("{}^2", var_label(a)) } else { format!("{}{}", var_label(a), var_label(b)) };
        Self::new(label, vec![Term::Monomial { coef: 1.0, factors: vec![a, b] }])
    }

    pub fn energy() -> Self {
        Self::new("H", vec![Term::Energy { coef: 1.0 }])
    }

    pub fn particle_energy(i: usize) -> Self {
        Self::new(format!("H{}", i + 1), vec![Term::ParticleEnergy { coef: 1.0, particle: i }])
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Largest coordinate index referenced, plus one.
    pub fn min_dim(&self) -> usize {
        self.terms
            .iter()
            .map(|t| match t {
                Term::Monomial { factors, .. } => {
                    factors.iter().map(|v| match v { Var::Q(i) | Var::P(i) => i + 1 }).max().unwrap_or(0)
                }
                Term::Energy { .. } => 0,
                Term::ParticleEnergy { particle, .. } => particle + 1,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        let need = self.min_dim();
        if need > n {
            return Err(Error::InvalidArgument(format!(
                "observable `{}` refers to coordinate {need} of a {n}-particle system",
                self.label
            )));
        }
        Ok(())
    }

    /// Evaluates at `ψ`; dimensions are assumed to have been checked.
    pub fn eval(&self, h: &QuadraticHamiltonian, psi: &PhaseVector) -> f64 {
        self.terms
            .iter()
            .map(|t| match t {
                Term::Monomial { coef, factors } => {
                    coef * factors
                        .iter()
                        .map(|v| match *v {
                            Var::Q(i) => psi.q[i],
                            Var::P(i) => psi.p[i],
                        })
                        .product::<f64>()
                }
                Term::Energy { coef } => coef * h.energy(psi).expect("dimension checked"),
                Term::ParticleEnergy { coef, particle } => {
                    let i = *particle;
                    let coupling = h.matrix().row(i).transpose().dot(&psi.q);
                    coef * (0.5 * psi.p[i] * psi.p[i] + 0.5 * psi.q[i] * coupling)
                }
            })
            .sum()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let label = text.trim().to_string();
        if label.is_empty() {
            return Err(Error::Parse("empty observable".into()));
        }
        let mut terms = Vec::new();
        for (sign, chunk) in split_signed(&label)? {
            terms.push(parse_term(sign, chunk.trim(), &label)?);
        }
        Ok(Observable { label, terms })
    }

    /// Parses a comma- or semicolon-separated list such as `p1^2,p2^2,q1q2`.
    pub fn parse_list(text: &str) -> Result<Vec<Self>> {
        text.split([',', ';']).filter(|s| !s.trim().is_empty()).map(Self::parse).collect()
    }
}

fn var_label(v: Var) -> String {
    match v {
        Var::Q(i) => format!("q{}", i + 1),
        Var::P(i) => format!("p{}", i + 1),
    }
}

/// Splits at `+`/`-` signs that are not part of a number exponent.
fn split_signed(text: &str) -> Result<Vec<(f64, &str)>> {
    let dangling = || Error::Parse(format!("observable `{text}`: dangling operator"));
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut sign = 1.0_f64;
    let mut start = 0;
    for (i, &b) in bytes.iter().enumerate() {
        if b != b'+' && b != b'-' {
            continue;
        }
        let exponent = i > 1 && matches!(bytes[i - 1], b'e' | b'E') && bytes[i - 2].is_ascii_digit();
        if exponent {
            continue;
        }
        let chunk = text[start..i].trim();
        if chunk.is_empty() {
            // Only a leading unary sign may stand without a preceding term.
            if !out.is_empty() || start != 0 {
                return Err(dangling());
            }
        } else {
            out.push((sign, chunk));
        }
        sign = if b == b'-' { -1.0 } else { 1.0 };
        start = i + 1;
    }
    let chunk = text[start..].trim();
    if chunk.is_empty() {
        return Err(dangling());
    }
    out.push((sign, chunk));
    Ok(out)
}

fn parse_index(digits: &str, whole: &str) -> Result<usize> {
    match digits.parse::<usize>() {
        Ok(i) if i >= 1 => Ok(i - 1),
        _ => Err(Error::Parse(format!("observable `{whole}`: bad index `{digits}`"))),
    }
}

fn parse_term(sign: f64, chunk: &str, whole: &str) -> Result<Term> {
    let bad = || Error::Parse(format!("observable `{whole}`: cannot parse `{chunk}`"));
    let mut coef = sign;
    let mut factors = Vec::new();
    let mut energy: Option<Option<usize>> = None;
    for part in chunk.split('*').map(str::trim) {
        if part.is_empty() {
            return Err(bad());
        }
        if let Ok(x) = part.parse::<f64>() {
            coef *= x;
            continue;
        }
        if let Some(rest) = part.strip_prefix('H') {
            if energy.is_some() || !factors.is_empty() {
                return Err(bad());
            }
            energy = Some(if rest.is_empty() { None } else { Some(parse_index(rest, whole)?) });
            continue;
        }
        // A run of q<i>/p<i> factors, each optionally raised to ^k.
        let b = part.as_bytes();
        let mut i = 0;
        while i < b.len() {
            let kind = b[i];
            if kind != b'q' && kind != b'p' {
                return Err(bad());
            }
            let mut j = i + 1;
            while j < b.len() && b[j].is_ascii_digit() {
                j += 1;
            }
            let idx = parse_index(&part[i + 1..j], whole)?;
            let var = if kind == b'q' { Var::Q(idx) } else { Var::P(idx) };
            let mut power = 1;
            if j < b.len() && b[j] == b'^' {
                let mut k = j + 1;
                while k < b.len() && b[k].is_ascii_digit() {
                    k += 1;
                }
                power = part[j + 1..k].parse::<usize>().map_err(|_| bad())?;
                j = k;
            }
            factors.extend(std::iter::repeat_n(var, power));
            i = j;
        }
    }
    match energy {
        Some(_) if !factors.is_empty() => Err(bad()),
        Some(None) => Ok(Term::Energy { coef }),
        Some(Some(particle)) => Ok(Term::ParticleEnergy { coef, particle }),
        None => Ok(Term::Monomial { coef, factors }),
    }
}
