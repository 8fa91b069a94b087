use std::f64::consts::PI;

use crate::sequence::PulseSequence;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentShape {
    /// Constant weight.
    Flat(f64),
    /// `from * cos(pi (T - start) / (end - start))`: a pi pulse carrying the
    /// weight from `from` to `-from`.
    Ramp { from: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub shape: SegmentShape,
}

impl Segment {
    pub fn weight(&self, big_t: f64) -> f64 {
        match self.shape {
            SegmentShape::Flat(s) => s,
            SegmentShape::Ramp { from } => {
                from * (PI * (big_t - self.start) / (self.end - self.start)).cos()
            }
        }
    }
}

/// Signed sensitivity `f(T)` of the accumulated phase to the field.
///
/// Zero before the end of the first pi/2 pulse and after the start of the
/// last; in between it is +1 and flips sign through a cosine ramp across
/// every pi pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationFunction {
    pub segments: Vec<Segment>,
}

impl ModulationFunction {
    pub fn start(&self) -> f64 {
        self.segments.first().map_or(0.0, |s| s.start)
    }

    pub fn end(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.end)
    }

    pub fn eval(&self, big_t: f64) -> f64 {
        // Segments are contiguous and sorted.
        let idx = self.segments.partition_point(|s| s.end <= big_t);
        match self.segments.get(idx) {
            Some(seg) if big_t >= seg.start => seg.weight(big_t),
            _ => 0.0,
        }
    }

    /// `T_ns,f` rows sampled every `step` seconds over the support.
    pub fn to_csv(&self, step: f64) -> String {
        let mut out = String::from("T_ns,f\n");
        let (a, b) = (self.start(), self.end());
        let n = ((b - a) / step).round().max(1.0) as usize;
        for i in 0..=n {
            let t = a + (b - a) * i as f64 / n as f64;
            out.push_str(&format!("{},{}\n", t * 1e9, self.eval(t)));
        }
        out
    }
}

/// Sensitivity function of `seq` with cosine ramps at every inner pulse.
pub fn build_modulation(seq: &PulseSequence) -> ModulationFunction {
    let mut segments = Vec::new();
    let n = seq.pulses.len();
    if n < 2 {
        return ModulationFunction { segments };
    }
    let mut cursor = seq.pulses[0].end();
    let mut sign = 1.0;
    for pulse in &seq.pulses[1..n - 1] {
        if pulse.start > cursor {
            segments.push(Segment {
                start: cursor,
                end: pulse.start,
                shape: SegmentShape::Flat(sign),
            });
        }
        segments.push(Segment {
            start: pulse.start,
            end: pulse.end(),
            shape: SegmentShape::Ramp { from: sign },
        });
        sign = -sign;
        cursor = pulse.end();
    }
    let last = seq.pulses[n - 1].start;
    if last > cursor {
        segments.push(Segment {
            start: cursor,
            end: last,
            shape: SegmentShape::Flat(sign),
        });
    }
    ModulationFunction { segments }
}
