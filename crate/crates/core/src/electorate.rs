//! Equicorrelated normal electorates.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::IdealPoint;
use crate::rng::{domain, Substream};

pub use crate::normal::std_normal_cdf;

/// Unit-variance equicorrelation structure. For `dim == 1`, `rho` is ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSpec {
    pub dim: usize,
    pub rho: f64,
}

impl CorrelationSpec {
    pub fn new(dim: usize, rho: f64) -> Result<Self> {
        let spec = Self { dim, rho };
        spec.validate()?;
        Ok(spec)
    }

    /// Open interval of admissible correlations.
    pub fn valid_range(dim: usize) -> (f64, f64) {
        if dim <= 1 {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (-1.0 / (dim as f64 - 1.0), 1.0)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        if self.dim == 1 {
            return Ok(());
        }
        let (lo, hi) = Self::valid_range(self.dim);
        if !(self.rho > lo && self.rho < hi) {
            return Err(Error::InvalidCorrelation { dim: self.dim, rho: self.rho, lo, hi });
        }
        Ok(())
    }
}

/// Unit diagonal, `rho` elsewhere.
pub fn equicorrelation_matrix(spec: &CorrelationSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let d = spec.dim;
    Ok(DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { spec.rho }))
}

/// Lower Cholesky factor `L` with `L * L^T = m`.
///
/// A pivot that is not strictly positive (relative to the original diagonal
/// entry) is reported with its row, which callers use to name the
/// offending variable.
pub fn cholesky_lower(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch { expected: n, found: m.ncols() });
    }
    for i in 0..n {
        for j in 0..i {
            let (a, b) = (m[(i, j)], m[(j, i)]);
            if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                return Err(Error::InvalidInput(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut pivot = m[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if !(pivot > 1e-12 * m[(j, j)].abs()) || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let diag = pivot.sqrt();
        l[(j, j)] = diag;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / diag;
        }
    }
    Ok(l)
}

/// A sampled population of voter ideal points, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Electorate {
    dim: usize,
    coords: Vec<f64>,
    spec: CorrelationSpec,
    seed: Option<u64>,
}

impl Electorate {
    pub fn from_points(points: &[IdealPoint], spec: CorrelationSpec) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyElectorate);
        }
        let dim = points[0].dim();
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: p.dim() });
            }
            coords.extend_from_slice(p.coords());
        }
        if spec.dim != dim {
            return Err(Error::DimensionMismatch { expected: spec.dim, found: dim });
        }
        Ok(Self { dim, coords, spec, seed: None })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn spec(&self) -> CorrelationSpec {
        self.spec
    }

    /// Seed the electorate was sampled with; `None` for imported populations.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn voter(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn voters(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub(crate) fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Writes `v0,...,v{d-1}` rows. Floats use shortest round-trip formatting.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        writeln!(out, "# electorate dim={} rho={} seed={} n={}", self.dim, self.spec.rho, seed, self.len())?;
        let header: Vec<String> = (0..self.dim).map(|j| format!("v{j}")).collect();
        writeln!(out, "{}", header.join(","))?;
        for v in self.voters() {
            let row: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Reads a file produced by [`Electorate::write_csv`]. `rho` and `seed`
    /// are recovered from the leading comment when present.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut rho = 0.0;
        let mut seed = None;
        let mut dim = None;
        let mut coords = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                for tok in comment.split_whitespace() {
                    match tok.split_once('=') {
                        Some(("rho", v)) => rho = v.parse().map_err(|_| Error::Parse(format!("bad rho `{v}`")))?,
                        Some(("seed", v)) => seed = v.parse().ok(),
                        _ => {}
                    }
                }
                continue;
            }
            match dim {
                None => {
                    let cols: Vec<&str> = line.split(',').map(str::trim).collect();
                    for (j, c) in cols.iter().enumerate() {
                        if *c != format!("v{j}") {
                            return Err(Error::Parse(format!("unexpected electorate header column `{c}`")));
                        }
                    }
                    dim = Some(cols.len());
                }
                Some(d) => {
                    let before = coords.len();
                    for field in line.split(',') {
                        let x: f64 = field.trim().parse().map_err(|_| {
                            Error::Parse(format!("line {}: bad number `{field}`", lineno + 1))
                        })?;
                        if !x.is_finite() {
                            return Err(Error::Parse(format!("line {}: non-finite value", lineno + 1)));
                        }
                        coords.push(x);
                    }
                    if coords.len() - before != d {
                        return Err(Error::Parse(format!("line {}: expected {d} fields", lineno + 1)));
                    }
                }
            }
        }
        let dim = dim.ok_or_else(|| Error::Parse("missing electorate header".into()))?;
        if coords.is_empty() {
            return Err(Error::EmptyElectorate);
        }
        let spec = CorrelationSpec::new(dim, rho)?;
        Ok(Self { dim, coords, spec, seed })
    }
}

/// Draws `n` i.i.d. voters from `N(0, Sigma(spec))`.
///
/// Voter `i` is a function of `(seed, i)` only, so prefixes agree across
/// different `n` and the result is independent of the thread count.
pub fn sample_electorate(spec: &CorrelationSpec, n: usize, seed: u64) -> Result<Electorate> {
    if n == 0 {
        return Err(Error::EmptyElectorate);
    }
    let l = cholesky_lower(&equicorrelation_matrix(spec)?)?;
    let d = spec.dim;
    let root = Substream::root(seed, domain::ELECTORATE);
    let mut coords = vec![0.0; n * d];
    coords.par_chunks_mut(d).enumerate().for_each(|(i, out)| {
        let mut s = root.derive(i as u64);
        let z: Vec<f64> = (0..d).map(|_| s.next_normal()).collect();
        for (r, o) in out.iter_mut().enumerate() {
            *o = (0..=r).map(|k| l[(r, k)] * z[k]).sum();
        }
    });
    Ok(Electorate { dim: d, coords, spec: *spec, seed: Some(seed) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).abs().max()
    }

    #[test]
    fn equicorrelation_examples() {
        let m = equicorrelation_matrix(&CorrelationSpec::new(2, 0.5).unwrap()).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]));
        let m3 = equicorrelation_matrix(&CorrelationSpec::new(3, 0.5).unwrap()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m3[(i, j)], if i == j { 1.0 } else { 0.5 });
            }
        }
        let id = equicorrelation_matrix(&CorrelationSpec::new(2, 0.0).unwrap()).unwrap();
        assert_eq!(id, DMatrix::identity(2, 2));
    }

    #[test]
    fn invalid_correlation_names_range() {
        let err = CorrelationSpec::new(3, -0.6).unwrap_err();
        assert_eq!(err, Error::InvalidCorrelation { dim: 3, rho: -0.6, lo: -0.5, hi: 1.0 });
        assert!(err.to_string().contains("(-0.5, 1)"));
        assert!(CorrelationSpec::new(2, 1.0).is_err());
        assert!(CorrelationSpec::new(1, 7.0).is_ok());
    }

    #[test]
    fn cholesky_examples() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!(cholesky_lower(&id).unwrap(), id);

        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let l = cholesky_lower(&m).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 0.75f64.sqrt()]);
        assert!(max_abs_diff(&l, &expected) < 1e-15);
        assert!(max_abs_diff(&(&l * l.transpose()), &m) <= 1e-10);

        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(cholesky_lower(&singular), Err(Error::NotPositiveDefinite { index: 1, .. })));
    }

    #[test]
    fn cholesky_reconstructs_valid_specs() {
        for d in 1..=10 {
            let (lo, _) = CorrelationSpec::valid_range(d);
            let lo = if lo.is_finite() { lo } else { -0.9 };
            for k in 1..20 {
                let rho = lo + (1.0 - lo) * k as f64 / 20.0;
                let m = equicorrelation_matrix(&CorrelationSpec::new(d, rho).unwrap()).unwrap();
                let l = cholesky_lower(&m).unwrap();
                assert!(max_abs_diff(&(&l * l.transpose()), &m) <= 1e-10, "d={d} rho={rho}");
            }
        }
    }

    #[test]
    fn sampling_is_prefix_stable() {
        let spec = CorrelationSpec::new(2, 0.5).unwrap();
        let small = sample_electorate(&spec, 100, 3).unwrap();
        let large = sample_electorate(&spec, 1000, 3).unwrap();
        assert_eq!(small.coords(), &large.coords()[..200]);
        assert_eq!(sample_electorate(&spec, 0, 3), Err(Error::EmptyElectorate));
    }

    #[test]
    fn csv_round_trip() {
        let spec = CorrelationSpec::new(3, 0.25).unwrap();
        let e = sample_electorate(&spec, 50, 11).unwrap();
        let mut buf = Vec::new();
        e.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().nth(1).unwrap() == "v0,v1,v2");
        let back = Electorate::read_csv(&buf[..]).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn csv_rejects_ragged_rows() {
        let text = "v0,v1\n1,2\n3\n";
        assert!(matches!(Electorate::read_csv(text.as_bytes()), Err(Error::Parse(_))));
    }
}
