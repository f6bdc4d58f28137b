//! Parameter vectors ↔ evaporation specs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaporation::{
    EllipticPeak, EvaporationSpec, Peak, RadialEvaporation, StreakEvaporation,
};

/// An evaporation function for any of the three geometries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "geometry", rename_all = "snake_case")]
pub enum ModelSpec {
    Planar(EvaporationSpec),
    Radial(RadialEvaporation),
    Streak(StreakEvaporation),
}

/// How a parameter vector is read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "snake_case")]
pub enum Layout {
    /// (v_b, a, f_x, f_y, x_0, y_0, e, β).
    Ellipse,
    /// (v_b, a_1..a_K, f_x1, f_y1, .., x_1, y_1, .., e_1..e_K, β_1..β_K).
    MultiSpot { peaks: usize },
    /// (v_b, r_w, a, β).
    Radial,
    /// (v_b, x_w, a, β) with the streak centre held fixed.
    Streak { x_c: f64 },
}

impl Layout {
    pub fn len(&self) -> usize {
        match self {
            Layout::Ellipse => 8,
            Layout::MultiSpot { peaks } => 7 * peaks + 1,
            Layout::Radial | Layout::Streak { .. } => 4,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn names(&self) -> Vec<String> {
        let own = |v: &[&str]| v.iter().map(|s| s.to_string()).collect();
        match self {
            Layout::Ellipse => own(&["v_b", "a", "f_x", "f_y", "x_0", "y_0", "e", "beta"]),
            Layout::MultiSpot { peaks } => {
                let k = *peaks;
                let mut out = vec!["v_b".to_string()];
                out.extend((1..=k).map(|i| format!("a_{i}")));
                for i in 1..=k {
                    out.push(format!("f_x{i}"));
                    out.push(format!("f_y{i}"));
                }
                for i in 1..=k {
                    out.push(format!("x_{i}"));
                    out.push(format!("y_{i}"));
                }
                out.extend((1..=k).map(|i| format!("e_{i}")));
                out.extend((1..=k).map(|i| format!("beta_{i}")));
                out
            }
            Layout::Radial => own(&["v_b", "r_w", "a", "beta"]),
            Layout::Streak { .. } => own(&["v_b", "x_w", "a", "beta"]),
        }
    }

    pub fn decode(&self, p: &[f64]) -> Result<ModelSpec> {
        if p.len() != self.len() {
            return Err(Error::Shape(format!(
                "parameter vector has {} entries, layout needs {}",
                p.len(),
                self.len()
            )));
        }
        Ok(match *self {
            Layout::Ellipse => ModelSpec::Planar(EvaporationSpec::single_ellipse(
                p[0],
                EllipticPeak {
                    a: p[1],
                    fx: p[2],
                    fy: p[3],
                    x0: p[4],
                    y0: p[5],
                    e: p[6],
                    beta: p[7],
                },
            )),
            Layout::MultiSpot { peaks: k } => ModelSpec::Planar(EvaporationSpec {
                v_b: p[0],
                peaks: (0..k)
                    .map(|i| {
                        Peak::Elliptic(EllipticPeak {
                            a: p[1 + i],
                            fx: p[1 + k + 2 * i],
                            fy: p[2 + k + 2 * i],
                            x0: p[1 + 3 * k + 2 * i],
                            y0: p[2 + 3 * k + 2 * i],
                            e: p[1 + 5 * k + i],
                            beta: p[1 + 6 * k + i],
                        })
                    })
                    .collect(),
            }),
            Layout::Radial => ModelSpec::Radial(RadialEvaporation {
                v_b: p[0],
                r_w: p[1],
                a: p[2],
                beta: p[3],
            }),
            Layout::Streak { x_c } => ModelSpec::Streak(StreakEvaporation {
                v_b: p[0],
                x_w: p[1],
                a: p[2],
                beta: p[3],
                x_c,
            }),
        })
    }

    pub fn encode(&self, spec: &ModelSpec) -> Result<Vec<f64>> {
        let mismatch = || Error::Shape(format!("spec does not fit layout {self:?}"));
        match (*self, spec) {
            (Layout::Ellipse, ModelSpec::Planar(s)) => match s.peaks.as_slice() {
                [Peak::Elliptic(q)] => Ok(vec![s.v_b, q.a, q.fx, q.fy, q.x0, q.y0, q.e, q.beta]),
                _ => Err(mismatch()),
            },
            (Layout::MultiSpot { peaks: k }, ModelSpec::Planar(s)) => {
                let qs: Vec<&EllipticPeak> = s
                    .peaks
                    .iter()
                    .filter_map(|p| match p {
                        Peak::Elliptic(q) => Some(q),
                        Peak::Circular(_) => None,
                    })
                    .collect();
                if qs.len() != k || s.peaks.len() != k {
                    return Err(mismatch());
                }
                let mut p = vec![s.v_b];
                p.extend(qs.iter().map(|q| q.a));
                for q in &qs {
                    p.extend([q.fx, q.fy]);
                }
                for q in &qs {
                    p.extend([q.x0, q.y0]);
                }
                p.extend(qs.iter().map(|q| q.e));
                p.extend(qs.iter().map(|q| q.beta));
                Ok(p)
            }
            (Layout::Radial, ModelSpec::Radial(r)) => Ok(vec![r.v_b, r.r_w, r.a, r.beta]),
            (Layout::Streak { x_c }, ModelSpec::Streak(s)) if s.x_c == x_c => {
                Ok(vec![s.v_b, s.x_w, s.a, s.beta])
            }
            _ => Err(mismatch()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_spot_indices_follow_the_documented_order() {
        let layout = Layout::MultiSpot { peaks: 2 };
        let p: Vec<f64> = (0..15).map(|v| v as f64).collect();
        let ModelSpec::Planar(s) = layout.decode(&p).unwrap() else {
            panic!()
        };
        let Peak::Elliptic(b) = s.peaks[1] else {
            panic!()
        };
        assert_eq!(
            (b.a, b.fx, b.fy, b.x0, b.y0, b.e, b.beta),
            (2.0, 5.0, 6.0, 9.0, 10.0, 12.0, 14.0)
        );
        assert_eq!(layout.names()[9], "x_2");
        assert_eq!(layout.encode(&ModelSpec::Planar(s)).unwrap(), p);
    }

    #[test]
    fn wrong_length_is_rejected() {
        assert!(Layout::Ellipse.decode(&[0.0; 7]).is_err());
    }
}
