//! Piecewise boundary curves for tube boundaries.
//!
//! A profile is a list of segments over absolute time, each continuously
//! differentiable, spliced so the whole curve stays continuously
//! differentiable: smoothstep ramps have zero end slopes, and corridor
//! blends enter and leave with zero weight and zero weight slope. Segments
//! evaluate at absolute time and clamp outside their nominal range, so a
//! piece can be split at any knot without changing the curve.

/// Cubic smoothstep on [0, 1]: zero slope at both ends.
pub fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

/// Derivative of [`smoothstep`] (zero outside [0, 1]).
pub fn smoothstep_slope(u: f64) -> f64 {
    if !(0.0..=1.0).contains(&u) {
        return 0.0;
    }
    6.0 * u * (1.0 - u)
}

/// One curve segment, evaluated at absolute time.
#[derive(Debug, Clone)]
pub enum Segment {
    /// Constant value.
    Const { value: f64 },
    /// Smoothstep ramp from `from` at `start` to `to` at `end`, clamped
    /// outside.
    Smooth {
        from: f64,
        to: f64,
        start: f64,
        end: f64,
    },
    /// Corridor blend: follows `base` outside the window, sits exactly at
    /// `target` on [t_a, t_b], and crossfades with smoothstep weight over
    /// [t_a - delta, t_a] and [t_b, t_b + delta].
    Blend {
        base: Box<Segment>,
        target: f64,
        t_a: f64,
        t_b: f64,
        delta: f64,
    },
}

impl Segment {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Segment::Const { value } => *value,
            Segment::Smooth {
                from,
                to,
                start,
                end,
            } => {
                let u = (t - start) / (end - start);
                from + (to - from) * smoothstep(u)
            }
            Segment::Blend {
                base,
                target,
                t_a,
                t_b,
                delta,
            } => {
                let b = base.value(t);
                let w = blend_weight(t, *t_a, *t_b, *delta);
                b + w * (target - b)
            }
        }
    }

    pub fn slope(&self, t: f64) -> f64 {
        match self {
            Segment::Const { .. } => 0.0,
            Segment::Smooth {
                from,
                to,
                start,
                end,
            } => {
                let u = (t - start) / (end - start);
                (to - from) * smoothstep_slope(u) / (end - start)
            }
            Segment::Blend {
                base,
                target,
                t_a,
                t_b,
                delta,
            } => {
                let b = base.value(t);
                let db = base.slope(t);
                let w = blend_weight(t, *t_a, *t_b, *delta);
                let dw = blend_weight_slope(t, *t_a, *t_b, *delta);
                db * (1.0 - w) + dw * (target - b)
            }
        }
    }

    /// Limit value as t grows without bound.
    pub fn end_value(&self) -> f64 {
        match self {
            Segment::Const { value } => *value,
            Segment::Smooth { to, .. } => *to,
            Segment::Blend { base, .. } => base.end_value(),
        }
    }
}

fn blend_weight(t: f64, t_a: f64, t_b: f64, delta: f64) -> f64 {
    if t < t_a {
        smoothstep((t - (t_a - delta)) / delta)
    } else if t <= t_b {
        1.0
    } else {
        1.0 - smoothstep((t - t_b) / delta)
    }
}

fn blend_weight_slope(t: f64, t_a: f64, t_b: f64, delta: f64) -> f64 {
    if t < t_a {
        smoothstep_slope((t - (t_a - delta)) / delta) / delta
    } else if t <= t_b {
        0.0
    } else {
        -smoothstep_slope((t - t_b) / delta) / delta
    }
}

/// Piecewise curve over [0, inf): knot times ascending, piece i active on
/// [knot_i, knot_{i+1}), the last piece open-ended.
#[derive(Debug, Clone)]
pub struct ScalarProfile {
    pieces: Vec<(f64, Segment)>,
}

impl ScalarProfile {
    pub fn constant(value: f64) -> ScalarProfile {
        ScalarProfile {
            pieces: vec![(0.0, Segment::Const { value })],
        }
    }

    /// Smoothstep from `from` to `to` over [t0, t1], constant at `to`
    /// afterwards (and at `from` before t0).
    pub fn smooth(from: f64, to: f64, t0: f64, t1: f64) -> ScalarProfile {
        assert!(t1 > t0, "ramp needs positive duration");
        ScalarProfile {
            pieces: vec![(
                0.0,
                Segment::Smooth {
                    from,
                    to,
                    start: t0,
                    end: t1,
                },
            )],
        }
    }

    pub fn pieces(&self) -> &[(f64, Segment)] {
        &self.pieces
    }

    /// Knot times, including the leading zero.
    pub fn knots(&self) -> Vec<f64> {
        self.pieces.iter().map(|(t, _)| *t).collect()
    }

    fn piece_index(&self, t: f64) -> usize {
        // last piece whose knot is <= t; times before the first knot use the
        // first piece, whose segment clamps anyway
        match self
            .pieces
            .iter()
            .rposition(|(knot, _)| *knot <= t + 1e-15)
        {
            Some(i) => i,
            None => 0,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.pieces[self.piece_index(t)].1.value(t)
    }

    pub fn slope(&self, t: f64) -> f64 {
        self.pieces[self.piece_index(t)].1.slope(t)
    }

    /// Limit value of the final piece.
    pub fn end_value(&self) -> f64 {
        self.pieces.last().unwrap().1.end_value()
    }

    /// Ensure a knot exists at `t` by splitting the containing piece;
    /// segments evaluate at absolute time, so the curve is unchanged.
    pub fn split_at(&mut self, t: f64) {
        if t <= 0.0 {
            return;
        }
        if self.pieces.iter().any(|(knot, _)| (knot - t).abs() < 1e-12) {
            return;
        }
        let i = self.piece_index(t);
        let seg = self.pieces[i].1.clone();
        self.pieces.insert(i + 1, (t, seg));
    }

    /// Blend every piece inside [t_a - delta, t_b + delta] toward `target`:
    /// the curve sits exactly at `target` on [t_a, t_b], crossfades over the
    /// two delta ramps, and is untouched outside. The window must start at
    /// or after time zero.
    pub fn blend_window(&mut self, t_a: f64, t_b: f64, delta: f64, target: f64) {
        assert!(delta > 0.0 && t_b >= t_a, "malformed blend window");
        assert!(t_a - delta >= 0.0, "blend window must not reach before time zero");
        let w0 = t_a - delta;
        let w1 = t_b + delta;
        self.split_at(w0);
        self.split_at(w1);
        for (knot, seg) in self.pieces.iter_mut() {
            if *knot >= w0 - 1e-12 && *knot < w1 - 1e-12 {
                let base = Box::new(seg.clone());
                *seg = Segment::Blend {
                    base,
                    target,
                    t_a,
                    t_b,
                    delta,
                };
            }
        }
    }
}
