//! Streams of labeled examples consumed by the learners.

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};
use crate::synth::{Dataset, LabeledExample, MassartInstance};

/// A source of i.i.d. labeled examples. Learners draw each example once.
pub trait SampleSource {
    /// Next example, or `None` when the source is exhausted.
    fn draw(&mut self) -> Option<LabeledExample>;

    fn dim(&self) -> usize;

    /// Generating instance, for white-box diagnostics.
    fn instance(&self) -> Option<&MassartInstance> {
        None
    }

    /// Examples remaining, when known.
    fn remaining(&self) -> Option<usize> {
        None
    }
}

impl<S: SampleSource + ?Sized> SampleSource for &mut S {
    fn draw(&mut self) -> Option<LabeledExample> {
        (**self).draw()
    }

    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn instance(&self) -> Option<&MassartInstance> {
        (**self).instance()
    }

    fn remaining(&self) -> Option<usize> {
        (**self).remaining()
    }
}

impl<S: SampleSource + ?Sized> SampleSource for Box<S> {
    fn draw(&mut self) -> Option<LabeledExample> {
        (**self).draw()
    }

    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn instance(&self) -> Option<&MassartInstance> {
        (**self).instance()
    }

    fn remaining(&self) -> Option<usize> {
        (**self).remaining()
    }
}

/// Draws exactly `n` examples; on exhaustion reports how many of the
/// `still_needed` examples (counting these `n`) were missing.
pub(crate) fn draw_many<S: SampleSource + ?Sized>(
    source: &mut S,
    n: usize,
    still_needed: usize,
) -> Result<Vec<LabeledExample>> {
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        match source.draw() {
            Some(e) => out.push(e),
            None => {
                return Err(Error::InsufficientSamples {
                    needed: still_needed - k,
                })
            }
        }
    }
    Ok(out)
}

/// Unbounded online stream from a generator instance, on the
/// [`Stream::Train`] stream of `seed`.
#[derive(Debug, Clone)]
pub struct InstanceStream {
    instance: MassartInstance,
    rng: ChaCha8Rng,
    drawn: usize,
}

impl InstanceStream {
    pub fn new(instance: MassartInstance, seed: u64) -> Self {
        Self::on_stream(instance, seed, Stream::Train)
    }

    pub fn on_stream(instance: MassartInstance, seed: u64, stream: Stream) -> Self {
        InstanceStream {
            instance,
            rng: stream_rng(seed, stream),
            drawn: 0,
        }
    }

    pub fn drawn(&self) -> usize {
        self.drawn
    }
}

impl SampleSource for InstanceStream {
    fn draw(&mut self) -> Option<LabeledExample> {
        self.drawn += 1;
        Some(self.instance.sample_example(&mut self.rng))
    }

    fn dim(&self) -> usize {
        self.instance.dim()
    }

    fn instance(&self) -> Option<&MassartInstance> {
        Some(&self.instance)
    }
}

/// Reads a finite dataset front to back.
#[derive(Debug, Clone)]
pub struct DatasetStream<'a> {
    dataset: &'a Dataset,
    pos: usize,
}

impl<'a> DatasetStream<'a> {
    pub fn new(dataset: &'a Dataset) -> Self {
        DatasetStream { dataset, pos: 0 }
    }
}

impl SampleSource for DatasetStream<'_> {
    fn draw(&mut self) -> Option<LabeledExample> {
        let e = self.dataset.examples().get(self.pos)?.clone();
        self.pos += 1;
        Some(e)
    }

    fn dim(&self) -> usize {
        self.dataset.dim()
    }

    fn instance(&self) -> Option<&MassartInstance> {
        self.dataset.instance()
    }

    fn remaining(&self) -> Option<usize> {
        Some(self.dataset.len() - self.pos)
    }
}
