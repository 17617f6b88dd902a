//! Capacity-bounded replay buffer: stratified per-domain reservoir sampling
//! over the stream of past samples.
//!
//! Capacity is shared across domains. `rebalance` splits it into near-equal
//! per-domain quotas at each domain boundary; `observe` runs reservoir
//! sampling within each domain's quota, so after k observations every item
//! has inclusion probability quota/k.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    slots: Vec<(String, Sample)>,
    /// Items observed per domain since the buffer was created.
    observed: BTreeMap<String, u64>,
    /// Per-domain slot quotas; empty until the first rebalance.
    quotas: BTreeMap<String, usize>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidCapacity(capacity));
        }
        Ok(ReplayBuffer {
            capacity,
            slots: Vec::new(),
            observed: BTreeMap::new(),
            quotas: BTreeMap::new(),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn quotas(&self) -> &BTreeMap<String, usize> {
        &self.quotas
    }

    /// Stored samples per domain.
    pub fn domain_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for (domain, _) in &self.slots {
            *counts.entry(domain.clone()).or_insert(0) += 1;
        }
        counts
    }

    /// Offer one sample to the buffer.
    ///
    /// Before any rebalance the whole capacity acts as a single pooled
    /// reservoir; afterwards each domain keeps a `quota`-sized reservoir of
    /// its own stream.
    pub fn observe(&mut self, domain_id: &str, sample: &Sample, rng: &mut ChaCha8Rng) {
        *self.observed.entry(domain_id.to_string()).or_insert(0) += 1;

        if self.quotas.is_empty() {
            let seen: u64 = self.observed.values().sum();
            if self.slots.len() < self.capacity {
                self.slots.push((domain_id.to_string(), sample.clone()));
            } else {
                let victim = rng.random_range(0..seen);
                if (victim as usize) < self.slots.len() {
                    self.slots[victim as usize] = (domain_id.to_string(), sample.clone());
                }
            }
            return;
        }

        let quota = self.quotas.get(domain_id).copied().unwrap_or(0);
        if quota == 0 {
            return;
        }
        let domain_slots: Vec<usize> = self
            .slots
            .iter()
            .enumerate()
            .filter(|(_, (d, _))| d == domain_id)
            .map(|(i, _)| i)
            .collect();
        let seen = self.observed[domain_id];
        if domain_slots.len() < quota {
            self.slots.push((domain_id.to_string(), sample.clone()));
        } else {
            // keep with probability quota/seen, evicting a uniform victim
            let pick = rng.random_range(0..seen);
            if (pick as usize) < quota {
                let victim = domain_slots[rng.random_range(0..domain_slots.len())];
                self.slots[victim] = (domain_id.to_string(), sample.clone());
            }
        }
        debug_assert!(self.slots.len() <= self.capacity);
    }

    /// Split capacity into near-equal quotas over `observed_domain_ids`
    /// (first `capacity % k` listed domains get the larger share) and evict
    /// uniformly from domains now over quota.
    pub fn rebalance(&mut self, observed_domain_ids: &[String], rng: &mut ChaCha8Rng) -> Result<()> {
        if observed_domain_ids.is_empty() {
            return Err(Error::NoDomains);
        }
        let k = observed_domain_ids.len();
        let base = self.capacity / k;
        let remainder = self.capacity % k;
        let mut quotas = BTreeMap::new();
        for (i, id) in observed_domain_ids.iter().enumerate() {
            quotas.insert(id.clone(), base + usize::from(i < remainder));
        }

        for id in observed_domain_ids {
            let quota = quotas[id];
            let mut domain_slots: Vec<usize> = self
                .slots
                .iter()
                .enumerate()
                .filter(|(_, (d, _))| d == id)
                .map(|(i, _)| i)
                .collect();
            while domain_slots.len() > quota {
                let pos = rng.random_range(0..domain_slots.len());
                let slot_idx = domain_slots.swap_remove(pos);
                self.slots.remove(slot_idx);
                // indices after the removed slot shift down by one
                for s in &mut domain_slots {
                    if *s > slot_idx {
                        *s -= 1;
                    }
                }
            }
        }
        // domains no longer in the observed set lose their quota and slots
        self.slots.retain(|(d, _)| quotas.contains_key(d));
        self.quotas = quotas;
        Ok(())
    }

    /// Draw `batch_size` samples uniformly with replacement.
    pub fn sample(&self, batch_size: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Sample>> {
        if self.slots.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        Ok((0..batch_size)
            .map(|_| self.slots[rng.random_range(0..self.slots.len())].1.clone())
            .collect())
    }

    /// Write the buffer as JSON-lines: a header with capacity, quotas and
    /// observation counters, then one `{domain_id, sample}` line per slot.
    pub fn save_snapshot(&self, path: &Path) -> Result<()> {
        let header = SnapshotHeader {
            capacity: self.capacity,
            quotas: self.quotas.clone(),
            observed: self.observed.clone(),
        };
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        serde_json::to_writer(&mut w, &header).map_err(json_err)?;
        w.write_all(b"\n")?;
        for (domain_id, sample) in &self.slots {
            let line = SnapshotSlot {
                domain_id: domain_id.clone(),
                regions: &sample.regions,
                phrases: &sample.phrases,
                targets: &sample.targets,
            };
            serde_json::to_writer(&mut w, &line).map_err(json_err)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load_snapshot(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let reader = BufReader::new(file);
        let mut lines = reader.lines().enumerate();
        let (_, first) = lines.next().ok_or(Error::DatasetParse {
            line: 1,
            message: "empty snapshot".into(),
        })?;
        let header: SnapshotHeader = parse(1, &first?)?;
        if header.capacity == 0 {
            return Err(Error::InvalidCapacity(0));
        }
        let mut slots = Vec::new();
        for (idx, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let slot: OwnedSnapshotSlot = parse(idx + 1, &line)?;
            slots.push((
                slot.domain_id,
                Sample {
                    regions: slot.regions,
                    phrases: slot.phrases,
                    targets: slot.targets,
                },
            ));
        }
        if slots.len() > header.capacity {
            return Err(Error::DatasetSchema {
                line: 1,
                message: format!(
                    "snapshot holds {} slots over capacity {}",
                    slots.len(),
                    header.capacity
                ),
            });
        }
        Ok(ReplayBuffer {
            capacity: header.capacity,
            slots,
            observed: header.observed,
            quotas: header.quotas,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct SnapshotHeader {
    capacity: usize,
    quotas: BTreeMap<String, usize>,
    observed: BTreeMap<String, u64>,
}

#[derive(Serialize)]
struct SnapshotSlot<'a> {
    domain_id: String,
    regions: &'a [Vec<f64>],
    phrases: &'a [Vec<usize>],
    targets: &'a [Vec<u8>],
}

#[derive(Deserialize)]
struct OwnedSnapshotSlot {
    domain_id: String,
    regions: Vec<Vec<f64>>,
    phrases: Vec<Vec<usize>>,
    targets: Vec<Vec<u8>>,
}

fn parse<T: serde::de::DeserializeOwned>(line: usize, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::DatasetParse {
        line,
        message: e.to_string(),
    })
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
