use std::fmt::Write as _;

use num_complex::Complex64;

use super::group::GroupElement;
use super::polynomial::{Convention, HomogeneousPolynomial};
use crate::error::{Error, Result};

/// The subvariety `M = {F_1 = … = F_s = 0}` of `P^N`.
///
/// `s = 0` is allowed internally and stands for `P^N` itself; it is what the
/// first level of the norm integrals runs over.
#[derive(Debug, Clone, PartialEq)]
pub struct CompleteIntersection {
    name: String,
    ambient_dim: usize,
    polys: Vec<HomogeneousPolynomial>,
}

impl CompleteIntersection {
    pub fn new(ambient_dim: usize, polys: Vec<HomogeneousPolynomial>) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(Error::InvalidDimensions("ambient dimension N must be at least 1".into()));
        }
        if polys.len() > ambient_dim {
            return Err(Error::InvalidDimensions(format!(
                "codimension {} exceeds ambient dimension {ambient_dim}",
                polys.len()
            )));
        }
        for f in &polys {
            if f.num_vars() != ambient_dim + 1 {
                return Err(Error::DimensionMismatch {
                    expected: ambient_dim + 1,
                    found: f.num_vars(),
                });
            }
        }
        Ok(Self {
            name: String::new(),
            ambient_dim,
            polys,
        })
    }

    /// Projective space `P^N`, the empty intersection.
    pub fn projective_space(ambient_dim: usize) -> Self {
        Self::new(ambient_dim, Vec::new()).expect("N >= 1").named(format!("P{ambient_dim}"))
    }

    /// Parses the variety format: a header `N=<int> s=<int>` then `s`
    /// polynomial blocks separated by lines consisting of `%`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (header_line, header) = loop {
            match lines.next() {
                None => return Err(Error::MalformedVariety("missing 'N=<int> s=<int>' header".into())),
                Some((i, raw)) => {
                    let l = raw.split('#').next().unwrap_or("").trim();
                    if !l.is_empty() {
                        break (i, l.to_string());
                    }
                }
            }
        };
        let mut n = None;
        let mut s = None;
        for tok in header.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::MalformedVariety(format!("bad header token '{tok}'")))?;
            let v: usize = v
                .parse()
                .map_err(|_| Error::MalformedVariety(format!("bad header value '{tok}'")))?;
            match k {
                "N" => n = Some(v),
                "s" => s = Some(v),
                _ => return Err(Error::MalformedVariety(format!("unknown header key '{k}'"))),
            }
        }
        let (n, s) = match (n, s) {
            (Some(n), Some(s)) => (n, s),
            _ => return Err(Error::MalformedVariety("header needs both N and s".into())),
        };
        if s == 0 {
            return Err(Error::InvalidDimensions("s must be at least 1".into()));
        }
        let mut blocks: Vec<(usize, String)> = vec![(header_line + 1, String::new())];
        for (i, raw) in lines {
            if raw.trim() == "%" {
                blocks.push((i + 1, String::new()));
            } else {
                let b = &mut blocks.last_mut().expect("nonempty").1;
                b.push_str(raw);
                b.push('\n');
            }
        }
        if blocks.len() != s {
            return Err(Error::MalformedVariety(format!(
                "header declares s={s} but the file has {} polynomial blocks",
                blocks.len()
            )));
        }
        let polys = blocks
            .iter()
            .map(|(offset, b)| HomogeneousPolynomial::parse_with_offset(b, n + 1, *offset))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, polys)
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `N`.
    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// `s`.
    pub fn codim(&self) -> usize {
        self.polys.len()
    }

    /// `n = N − s`.
    pub fn dim(&self) -> usize {
        self.ambient_dim - self.polys.len()
    }

    pub fn num_vars(&self) -> usize {
        self.ambient_dim + 1
    }

    pub fn polys(&self) -> &[HomogeneousPolynomial] {
        &self.polys
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.polys.iter().map(|f| f.degree()).collect()
    }

    /// `m = N + 1 − Σ d_i`.
    pub fn m(&self) -> i64 {
        self.ambient_dim as i64 + 1 - self.degrees().iter().map(|&d| d as i64).sum::<i64>()
    }

    /// `D = ∏ d_i`.
    pub fn degree(&self) -> u64 {
        self.degrees().iter().map(|&d| d as u64).product()
    }

    /// `p_k = D / d_k` for `k = 1..=s`.
    pub fn p(&self, k: usize) -> u64 {
        self.degree() / self.polys[k - 1].degree() as u64
    }

    /// `X_k = {F_1 = … = F_k = 0}`.
    pub fn leading(&self, k: usize) -> Self {
        Self {
            name: format!("{}[X{k}]", self.name),
            ambient_dim: self.ambient_dim,
            polys: self.polys[..k].to_vec(),
        }
    }

    pub fn transform(&self, sigma: &GroupElement, convention: Convention) -> Result<Self> {
        let polys = self
            .polys
            .iter()
            .map(|f| f.transform(sigma, convention))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            name: format!("{}^sigma", self.name),
            ambient_dim: self.ambient_dim,
            polys,
        })
    }

    /// Replaces `F_k` (1-based) by `λ F_k`.
    pub fn scale_poly(&self, k: usize, lambda: Complex64) -> Self {
        let mut out = self.clone();
        out.polys[k - 1] = out.polys[k - 1].scaled(lambda);
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if !self.name.is_empty() {
            let _ = writeln!(s, "# {}", self.name);
        }
        let _ = writeln!(s, "N={} s={}", self.ambient_dim, self.codim());
        for (i, f) in self.polys.iter().enumerate() {
            if i > 0 {
                s.push_str("%\n");
            }
            s.push_str(&f.to_text());
        }
        s
    }
}

pub const CATALOG_NAMES: [&str; 7] = [
    "hyperplane_p2",
    "conic_p2",
    "cubic_curve_p2",
    "fermat_quadric_p3",
    "quadric_cone_p3",
    "cubic_cone_p3",
    "ci22_p4",
];

const CATALOG_TEXT: [&str; 7] = [
    include_str!("../../catalog/hyperplane_p2.var"),
    include_str!("../../catalog/conic_p2.var"),
    include_str!("../../catalog/cubic_curve_p2.var"),
    include_str!("../../catalog/fermat_quadric_p3.var"),
    include_str!("../../catalog/quadric_cone_p3.var"),
    include_str!("../../catalog/cubic_cone_p3.var"),
    include_str!("../../catalog/ci22_p4.var"),
];

/// Source text of a built-in variety.
pub fn catalog_text(name: &str) -> Option<&'static str> {
    CATALOG_NAMES.iter().position(|n| *n == name).map(|i| CATALOG_TEXT[i])
}

pub fn catalog_entry(name: &str) -> Option<CompleteIntersection> {
    let text = catalog_text(name)?;
    Some(CompleteIntersection::parse(text).expect("catalog files are valid").named(name))
}

pub fn catalog() -> Vec<CompleteIntersection> {
    CATALOG_NAMES.iter().map(|n| catalog_entry(n).expect("listed")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_invariants() {
        let q = catalog_entry("fermat_quadric_p3").unwrap();
        assert_eq!((q.ambient_dim(), q.codim(), q.dim(), q.m(), q.degree()), (3, 1, 2, 2, 2));
        let c = catalog_entry("ci22_p4").unwrap();
        assert_eq!((c.dim(), c.m(), c.degree(), c.p(1), c.p(2)), (2, 1, 4, 2, 2));
        let e = catalog_entry("cubic_curve_p2").unwrap();
        assert_eq!(e.m(), 0);
        for ci in catalog() {
            for k in 1..=ci.codim() {
                assert_eq!(ci.p(k) * ci.polys()[k - 1].degree() as u64, ci.degree());
            }
        }
    }

    #[test]
    fn parse_round_trip_and_errors() {
        let c = catalog_entry("ci22_p4").unwrap();
        let back = CompleteIntersection::parse(&c.to_text()).unwrap();
        assert_eq!(back.polys(), c.polys());

        assert!(matches!(CompleteIntersection::parse(""), Err(Error::MalformedVariety(_))));
        assert!(matches!(
            CompleteIntersection::parse("N=2 s=2\n1 0 | 1 0 0\n"),
            Err(Error::MalformedVariety(_))
        ));
        assert!(matches!(
            CompleteIntersection::parse("N=2 s=1\n1 0 | 1 0 0\n1 0 | 0 2 0\n"),
            Err(Error::MixedDegree { line: 3, .. })
        ));
        assert!(matches!(
            CompleteIntersection::parse("N=1 s=2\n1 0 | 1 0\n%\n1 0 | 0 1\n"),
            Err(Error::InvalidDimensions(_))
        ));
    }

    #[test]
    fn leading_levels() {
        let c = catalog_entry("ci22_p4").unwrap();
        assert_eq!(c.leading(0).codim(), 0);
        assert_eq!(c.leading(0).degree(), 1);
        assert_eq!(c.leading(1).dim(), 3);
        assert_eq!(CompleteIntersection::projective_space(3).dim(), 3);
    }
}
