use std::collections::VecDeque;

use super::{chrom_window, pos_window, window_len, EstimatorError, EstimatorId};
use crate::rates::hann;

/// Frame-by-frame form of the estimators, doing only the work each new frame adds.
///
/// Emits raw (unstandardized) overlap-add samples once no later window can
/// touch them; over a whole trace the emitted sequence plus [`finish`]
/// equals the batch overlap-add.
///
/// [`finish`]: SlidingEstimator::finish
#[derive(Debug, Clone)]
pub struct SlidingEstimator {
    id: EstimatorId,
    len: usize,
    hop: usize,
    taper: Vec<f64>,
    r: VecDeque<f64>,
    g: VecDeque<f64>,
    b: VecDeque<f64>,
    acc: VecDeque<f64>,
    pushed: usize,
}

impl SlidingEstimator {
    pub fn new(id: EstimatorId, fs: f64, window_s: f64) -> Result<Self, EstimatorError> {
        let len = match id {
            EstimatorId::G => 1,
            _ => window_len(window_s, fs)?,
        };
        Ok(Self {
            id,
            len,
            hop: (len / 2).max(1),
            taper: hann(len),
            r: VecDeque::with_capacity(len + 1),
            g: VecDeque::with_capacity(len + 1),
            b: VecDeque::with_capacity(len + 1),
            acc: VecDeque::with_capacity(len + 1),
            pushed: 0,
        })
    }

    pub fn window_len(&self) -> usize {
        self.len
    }

    /// Adds one frame's mean colour; returns the sample that became final, if any.
    pub fn push(&mut self, r: f64, g: f64, b: f64) -> Option<f64> {
        let done = if self.r.len() == self.len {
            self.r.pop_front();
            self.g.pop_front();
            self.b.pop_front();
            self.acc.pop_front()
        } else {
            None
        };
        self.r.push_back(r);
        self.g.push_back(g);
        self.b.push_back(b);
        self.acc.push_back(0.0);
        self.pushed += 1;

        if self.r.len() == self.len {
            let (r, g, b) = (
                self.r.make_contiguous() as &[f64],
                self.g.make_contiguous() as &[f64],
                self.b.make_contiguous() as &[f64],
            );
            let contribution = match self.id {
                EstimatorId::G => Some(vec![-g[0]]),
                EstimatorId::Pos => pos_window(r, g, b),
                EstimatorId::Chrom => {
                    if (self.pushed - self.len).is_multiple_of(self.hop) {
                        chrom_window(r, g, b, &self.taper)
                    } else {
                        None
                    }
                }
            };
            if let Some(c) = contribution {
                self.acc.iter_mut().zip(c).for_each(|(a, v)| *a += v);
            }
        }
        done
    }

    /// Remaining buffered samples.
    pub fn finish(self) -> Vec<f64> {
        self.acc.into()
    }
}
