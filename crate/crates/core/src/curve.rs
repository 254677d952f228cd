use num_traits::Zero;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::rational::{self, Rational};
use crate::DmtError;

/// Piecewise-linear function given by exact breakpoints `(r, d)`.
///
/// `r` is strictly increasing and `d` non-increasing. Between breakpoints the
/// curve interpolates linearly; past the last breakpoint it is zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiecewiseLinearCurve {
    points: Vec<(Rational, Rational)>,
}

impl PiecewiseLinearCurve {
    pub fn new(points: Vec<(Rational, Rational)>) -> Result<Self, DmtError> {
        if points.is_empty() {
            return Err(DmtError::InvalidCurve("no breakpoints".into()));
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(DmtError::InvalidCurve(format!(
                    "r not strictly increasing at {}",
                    w[1].0
                )));
            }
            if w[1].1 > w[0].1 {
                return Err(DmtError::InvalidCurve(format!("d increases at r={}", w[1].0)));
            }
        }
        Ok(Self { points })
    }

    /// Build from points, dropping duplicate abscissae and collinear interior
    /// points so that equal functions have equal breakpoint lists.
    pub fn canonical(points: Vec<(Rational, Rational)>) -> Result<Self, DmtError> {
        let mut pts: Vec<(Rational, Rational)> = Vec::with_capacity(points.len());
        for p in points {
            match pts.last() {
                Some(last) if last.0 == p.0 => {
                    if last.1 != p.1 {
                        return Err(DmtError::InvalidCurve(format!("discontinuity at r={}", p.0)));
                    }
                }
                _ => pts.push(p),
            }
        }
        let mut out: Vec<(Rational, Rational)> = Vec::with_capacity(pts.len());
        for p in pts {
            while out.len() >= 2 {
                let a = out[out.len() - 2];
                let b = out[out.len() - 1];
                if (b.1 - a.1) * (p.0 - b.0) == (p.1 - b.1) * (b.0 - a.0) {
                    out.pop();
                } else {
                    break;
                }
            }
            out.push(p);
        }
        Self::new(out)
    }

    pub fn breakpoints(&self) -> &[(Rational, Rational)] {
        &self.points
    }

    pub fn r_max(&self) -> Rational {
        self.points.last().unwrap().0
    }

    pub fn eval(&self, r: Rational) -> Rational {
        let pts = &self.points;
        if r <= pts[0].0 {
            return pts[0].1;
        }
        if r > self.r_max() {
            return Rational::zero();
        }
        // first index with x ≥ r
        let i = pts.partition_point(|p| p.0 < r);
        let (x0, y0) = pts[i - 1];
        let (x1, y1) = pts[i];
        y0 + (y1 - y0) * (r - x0) / (x1 - x0)
    }

    pub fn eval_f64(&self, r: f64) -> f64 {
        let pts = &self.points;
        let x = |i: usize| rational::to_f64(&pts[i].0);
        let y = |i: usize| rational::to_f64(&pts[i].1);
        if r <= x(0) {
            return y(0);
        }
        if r > x(pts.len() - 1) {
            return 0.0;
        }
        let i = pts.partition_point(|p| rational::to_f64(&p.0) < r);
        y(i - 1) + (y(i) - y(i - 1)) * (r - x(i - 1)) / (x(i) - x(i - 1))
    }

    /// Slopes of consecutive segments.
    pub fn slopes(&self) -> Vec<Rational> {
        self.points
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect()
    }

    /// The function `r ↦ self(k·r)`.
    pub fn contract(&self, k: usize) -> Self {
        let k = Rational::from_integer(k as i64);
        Self {
            points: self.points.iter().map(|&(r, d)| (r / k, d)).collect(),
        }
    }

    /// Breakpoints of the restriction to `[lo, hi]` (inclusive endpoints).
    pub fn restrict(&self, lo: Rational, hi: Rational) -> Vec<(Rational, Rational)> {
        if hi < lo {
            return Vec::new();
        }
        let mut out = vec![(lo, self.eval(lo))];
        out.extend(self.points.iter().copied().filter(|p| p.0 > lo && p.0 < hi));
        if hi > lo {
            out.push((hi, self.eval(hi)));
        }
        out
    }

    /// Sample `(r, d)` on a grid from 0 to the last breakpoint.
    pub fn sample(&self, step: Rational) -> Vec<(Rational, Rational)> {
        rational::grid(Rational::zero(), self.r_max(), step)
            .into_iter()
            .map(|r| (r, self.eval(r)))
            .collect()
    }

    /// CSV text with header `r,d` on the given grid.
    pub fn to_csv(&self, step: Rational) -> String {
        let mut s = String::from("r,d\n");
        for (r, d) in self.sample(step) {
            s.push_str(&format!("{},{}\n", rational::to_f64(&r), rational::to_f64(&d)));
        }
        s
    }
}

impl Serialize for PiecewiseLinearCurve {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let bp: Vec<[i64; 4]> = self
            .points
            .iter()
            .map(|(r, d)| [*r.numer(), *r.denom(), *d.numer(), *d.denom()])
            .collect();
        let mut st = s.serialize_struct("PiecewiseLinearCurve", 1)?;
        st.serialize_field("breakpoints", &bp)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for PiecewiseLinearCurve {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            breakpoints: Vec<[i64; 4]>,
        }
        let raw = Raw::deserialize(d)?;
        let mut pts = Vec::with_capacity(raw.breakpoints.len());
        for [a, b, c, e] in raw.breakpoints {
            if b == 0 || e == 0 {
                return Err(serde::de::Error::custom("zero denominator"));
            }
            pts.push((rational::rat(a, b), rational::rat(c, e)));
        }
        PiecewiseLinearCurve::new(pts).map_err(serde::de::Error::custom)
    }
}
