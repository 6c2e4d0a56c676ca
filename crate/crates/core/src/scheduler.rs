//! First-fit payload data pilot (PDP) allocation over non-overlapping
//! visibility regions.
//!
//! Each PDP row holds the combined VR `f_j` of its members. A UE joins the
//! first row in creation order whose combined VR is disjoint from its own,
//! otherwise a new PDP is minted. Rows that become empty are removed and
//! their ids are never reused.

use std::fmt;

use crate::scenario::{UeId, VisibilityVector};
use crate::{Error, Result};

/// Stable PDP identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PdpId(pub u64);

impl fmt::Display for PdpId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Row {
    id: PdpId,
    /// Kept as counts so a double allocation shows up as a 2.
    combined: Vec<u32>,
    members: Vec<(UeId, VisibilityVector)>,
}

/// The combined-VR matrix `F` with its PDP membership.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PdpPool {
    subarrays: usize,
    rows: Vec<Row>,
    next_id: u64,
}

impl PdpPool {
    pub fn new(subarrays: usize) -> Self {
        Self {
            subarrays,
            rows: Vec::new(),
            next_id: 0,
        }
    }

    pub fn subarrays(&self) -> usize {
        self.subarrays
    }

    /// Number of live PDPs, i.e. the payload pilot length.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of UEs holding a PDP.
    pub fn member_count(&self) -> usize {
        self.rows.iter().map(|r| r.members.len()).sum()
    }

    pub fn ids(&self) -> impl Iterator<Item = PdpId> + '_ {
        self.rows.iter().map(|r| r.id)
    }

    pub fn combined(&self, id: PdpId) -> Option<&[u32]> {
        self.row(id).map(|r| r.combined.as_slice())
    }

    pub fn members(&self, id: PdpId) -> Option<Vec<UeId>> {
        self.row(id).map(|r| r.members.iter().map(|(ue, _)| *ue).collect())
    }

    pub fn pdp_of(&self, ue: UeId) -> Option<PdpId> {
        self.rows
            .iter()
            .find(|r| r.members.iter().any(|(m, _)| *m == ue))
            .map(|r| r.id)
    }

    fn row(&self, id: PdpId) -> Option<&Row> {
        self.rows.iter().find(|r| r.id == id)
    }

    fn check_vr(&self, v: &VisibilityVector) -> Result<()> {
        if v.len() != self.subarrays {
            return Err(Error::Domain(format!(
                "VR has {} SAs, pool has {}",
                v.len(),
                self.subarrays
            )));
        }
        if v.count() == 0 {
            return Err(Error::Domain("empty visibility region".into()));
        }
        Ok(())
    }

    fn mint(&mut self, ue: UeId, v: &VisibilityVector) -> PdpId {
        let id = PdpId(self.next_id);
        self.next_id += 1;
        let combined = (0..self.subarrays).map(|b| u32::from(v.is_visible(b))).collect();
        self.rows.push(Row {
            id,
            combined,
            members: vec![(ue, v.clone())],
        });
        id
    }

    /// Allocates a PDP to `ue` by first fit.
    pub fn allocate(&mut self, ue: UeId, v: &VisibilityVector) -> Result<PdpId> {
        self.check_vr(v)?;
        if self.pdp_of(ue).is_some() {
            return Err(Error::AlreadyAssigned(ue));
        }
        let fit = self.rows.iter_mut().find(|r| v.visible().all(|b| r.combined[b] == 0));
        match fit {
            Some(row) => {
                for b in v.visible() {
                    row.combined[b] += 1;
                }
                row.members.push((ue, v.clone()));
                Ok(row.id)
            }
            None => Ok(self.mint(ue, v)),
        }
    }

    /// Allocates a fresh PDP that no other UE will share through this call.
    pub fn allocate_exclusive(&mut self, ue: UeId, v: &VisibilityVector) -> Result<PdpId> {
        self.check_vr(v)?;
        if self.pdp_of(ue).is_some() {
            return Err(Error::AlreadyAssigned(ue));
        }
        Ok(self.mint(ue, v))
    }

    /// Removes `ue` from its PDP, dropping the row when it empties.
    pub fn release(&mut self, ue: UeId) -> Result<PdpId> {
        let (r, m) = self
            .rows
            .iter()
            .enumerate()
            .find_map(|(r, row)| row.members.iter().position(|(id, _)| *id == ue).map(|m| (r, m)))
            .ok_or(Error::NotAssigned(ue))?;
        let row = &mut self.rows[r];
        let (_, v) = row.members.remove(m);
        for b in v.visible() {
            row.combined[b] = row.combined[b]
                .checked_sub(1)
                .ok_or_else(|| Error::PoolCorrupted(format!("negative entry at {} SA {b}", row.id)))?;
        }
        let id = row.id;
        if row.combined.iter().all(|&c| c == 0) {
            if !row.members.is_empty() {
                return Err(Error::PoolCorrupted(format!("{id} is null but has members")));
            }
            self.rows.remove(r);
        }
        Ok(id)
    }

    /// Verifies that every row equals the sum of its members' VRs, that
    /// members of one PDP are pairwise disjoint, and that no row is null.
    pub fn check_invariants(&self) -> Result<()> {
        for row in &self.rows {
            let mut sum = vec![0u32; self.subarrays];
            for (_, v) in &row.members {
                for b in v.visible() {
                    sum[b] += 1;
                }
            }
            if sum != row.combined {
                return Err(Error::PoolCorrupted(format!("{} does not match its members", row.id)));
            }
            if let Some(b) = sum.iter().position(|&c| c > 1) {
                return Err(Error::PoolCorrupted(format!("{} members overlap at SA {b}", row.id)));
            }
            if sum.iter().all(|&c| c == 0) {
                return Err(Error::PoolCorrupted(format!("{} is a null row", row.id)));
            }
        }
        Ok(())
    }

    /// Line-oriented dump: a `subarrays B next N` header, then one
    /// `id combined-VR member:VR ...` line per PDP.
    pub fn dump(&self) -> String {
        let mut out = format!("subarrays {} next {}\n", self.subarrays, self.next_id);
        for row in &self.rows {
            out.push_str(&row.id.0.to_string());
            out.push(' ');
            out.extend(row.combined.iter().map(|c| char::from_digit(*c, 10).unwrap_or('*')));
            for (ue, v) in &row.members {
                out.push_str(&format!(" {ue}:{v}"));
            }
            out.push('\n');
        }
        out
    }

    /// Rebuilds a pool from [`PdpPool::dump`] output. Combined rows are
    /// recomputed from the members and must match the dump.
    pub fn parse_dump(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Domain(format!("pool dump: {msg}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| bad("missing header"))?
            .split_whitespace()
            .collect();
        let (subarrays, next_id): (usize, u64) = match header.as_slice() {
            ["subarrays", b, "next", n] => (
                b.parse().map_err(|_| bad("bad header"))?,
                n.parse().map_err(|_| bad("bad header"))?,
            ),
            _ => return Err(bad("missing header")),
        };
        let mut pool = PdpPool::new(subarrays);
        for line in lines {
            let mut fields = line.split_whitespace();
            let id: u64 = fields
                .next()
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| bad("bad PDP id"))?;
            let combined: Vec<u32> = fields
                .next()
                .ok_or_else(|| bad("missing VR"))?
                .chars()
                .map(|c| c.to_digit(10).ok_or_else(|| bad("bad VR digit")))
                .collect::<Result<_>>()?;
            let mut members = Vec::new();
            for f in fields {
                let (ue, vr) = f.split_once(':').ok_or_else(|| bad("bad member"))?;
                let ue: UeId = ue.parse().map_err(|_| bad("bad UE id"))?;
                let bits: Vec<u8> = vr
                    .chars()
                    .map(|c| c.to_digit(10).map(|d| d as u8).ok_or_else(|| bad("bad VR digit")))
                    .collect::<Result<_>>()?;
                members.push((ue, VisibilityVector::from_01(&bits)?));
            }
            if pool.rows.last().is_some_and(|r| r.id.0 >= id) || id >= next_id {
                return Err(bad("PDP ids must increase and stay below the next id"));
            }
            pool.rows.push(Row {
                id: PdpId(id),
                combined,
                members,
            });
        }
        pool.next_id = next_id;
        pool.check_invariants()?;
        Ok(pool)
    }
}
