//! Append-only message log of a protocol iteration with per-kind counters.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::field::Fp;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    User(usize),
    Federator,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    /// Federator broadcast of the quantized root update.
    RootBroadcast,
    /// Bivariate share views of a user update.
    UpdateSharing,
    /// Bivariate share views of a masking value `lambda_j`.
    LambdaSharing,
    /// Cross-evaluations exchanged for the consistency check.
    Consistency,
    /// Masking sub-shares for a squared-norm sharing.
    NormMask,
    /// A re-randomized squared-norm share sent to the federator.
    NormShare,
    /// Degree-reduction sub-shares.
    Reduction,
    /// Masking sub-shares for the final products.
    SigmaMask,
    /// Shares of `lambda Sigma_1` and `lambda Sigma_2` sent to the federator.
    SigmaShare,
    /// One-time-pad broadcast `u_i - r_i`.
    PadBroadcast,
    /// Masked Beaver contributions sent to the federator.
    BeaverOpen,
    /// Opened Beaver values announced by the federator.
    BeaverAnnounce,
    /// Norm results announced by the federator.
    Verdict,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Record {
    pub iteration: usize,
    pub sender: Endpoint,
    pub receiver: Endpoint,
    pub kind: MessageKind,
    pub elements: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payload: Option<Vec<String>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub messages: u64,
    pub elements: u64,
}

#[derive(Clone, Debug, Default)]
pub struct Transcript {
    iteration: usize,
    keep_records: bool,
    keep_payloads: bool,
    records: Vec<Record>,
    tallies: BTreeMap<MessageKind, Tally>,
}

impl Transcript {
    /// Counts only.
    pub fn counting(iteration: usize) -> Self {
        Self {
            iteration,
            ..Self::default()
        }
    }

    /// Keeps every record, optionally with payload values.
    pub fn recording(iteration: usize, payloads: bool) -> Self {
        Self {
            iteration,
            keep_records: true,
            keep_payloads: payloads,
            ..Self::default()
        }
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn push(
        &mut self,
        sender: Endpoint,
        receiver: Endpoint,
        kind: MessageKind,
        payload: &[Fp],
    ) {
        self.send(sender, receiver, kind, payload.len(), || payload.to_vec());
    }

    /// Logs a message of `elements` field elements; `payload` runs only when
    /// payloads are kept.
    pub fn send<F: FnOnce() -> Vec<Fp>>(
        &mut self,
        sender: Endpoint,
        receiver: Endpoint,
        kind: MessageKind,
        elements: usize,
        payload: F,
    ) {
        let t = self.tallies.entry(kind).or_default();
        t.messages += 1;
        t.elements += elements as u64;
        if self.keep_records {
            self.records.push(Record {
                iteration: self.iteration,
                sender,
                receiver,
                kind,
                elements,
                payload: self
                    .keep_payloads
                    .then(|| payload().iter().map(|e| e.value().to_string()).collect()),
            });
        }
    }

    pub fn keeps_payloads(&self) -> bool {
        self.keep_records && self.keep_payloads
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn tallies(&self) -> &BTreeMap<MessageKind, Tally> {
        &self.tallies
    }

    pub fn tally(&self, kind: MessageKind) -> Tally {
        self.tallies.get(&kind).copied().unwrap_or_default()
    }

    pub fn total(&self) -> Tally {
        self.tallies.values().fold(Tally::default(), |a, t| Tally {
            messages: a.messages + t.messages,
            elements: a.elements + t.elements,
        })
    }

    /// Messages delivered to `party`, in order.
    pub fn received_by(&self, party: usize) -> impl Iterator<Item = &Record> {
        self.records
            .iter()
            .filter(move |r| r.receiver == Endpoint::User(party))
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}
