use crate::error::{Error, Result};

use super::{GaussianHyper, LocalGroup};

/// A local atom address: `(group index, local index)`.
pub type AtomRef = (usize, usize);

/// Global atoms as index sets over local atoms, plus the per-group maps.
///
/// Invariants (see [`GlobalState::validate`]): every local atom of an
/// assigned group sits in exactly one global atom, a group contributes at
/// most one atom to any global atom, and no global atom is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalState {
    group_sizes: Vec<usize>,
    members: Vec<Vec<AtomRef>>,
    assignment: Vec<Option<Vec<usize>>>,
    pub hyper: GaussianHyper,
}

impl GlobalState {
    /// No group assigned, no global atoms.
    pub fn empty(groups: &[LocalGroup], hyper: GaussianHyper) -> Self {
        Self {
            group_sizes: groups.iter().map(LocalGroup::len).collect(),
            members: Vec::new(),
            assignment: vec![None; groups.len()],
            hyper,
        }
    }

    /// Build a state from explicit per-group global labels. Labels need not
    /// be contiguous; they are compacted in increasing label order.
    pub fn from_assignments(
        groups: &[LocalGroup],
        labels: &[Vec<usize>],
        hyper: GaussianHyper,
    ) -> Result<Self> {
        if labels.len() != groups.len() {
            return Err(Error::Dimension {
                expected: groups.len(),
                got: labels.len(),
            });
        }
        let mut distinct: Vec<usize> = labels.iter().flatten().copied().collect();
        distinct.sort_unstable();
        distinct.dedup();
        let mut state = Self::empty(groups, hyper);
        state.members = vec![Vec::new(); distinct.len()];
        for (j, (group, group_labels)) in groups.iter().zip(labels).enumerate() {
            if group_labels.len() != group.len() {
                return Err(Error::State(format!(
                    "group {} has {} atoms but {} labels",
                    group.id,
                    group.len(),
                    group_labels.len()
                )));
            }
            let map: Vec<usize> = group_labels
                .iter()
                .map(|l| distinct.binary_search(l).expect("label collected above"))
                .collect();
            for (l, &i) in map.iter().enumerate() {
                state.members[i].push((j, l));
            }
            state.assignment[j] = Some(map);
        }
        for m in &mut state.members {
            m.sort_unstable();
        }
        state.validate()?;
        Ok(state)
    }

    pub fn num_groups(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn num_atoms(&self) -> usize {
        self.members.len()
    }

    /// Number of groups contributing to global atom `i`.
    pub fn count(&self, i: usize) -> usize {
        self.members[i].len()
    }

    pub fn members(&self, i: usize) -> &[AtomRef] {
        &self.members[i]
    }

    pub fn assignment(&self, j: usize) -> Option<&[usize]> {
        self.assignment[j].as_deref()
    }

    pub fn is_assigned(&self, j: usize) -> bool {
        self.assignment[j].is_some()
    }

    pub fn assigned_groups(&self) -> usize {
        self.assignment.iter().filter(|a| a.is_some()).count()
    }

    pub fn all_assigned(&self) -> bool {
        self.assignment.iter().all(Option::is_some)
    }

    /// Per-group global labels; panics if some group is unassigned.
    pub fn labels(&self) -> Vec<Vec<usize>> {
        self.assignment
            .iter()
            .map(|a| a.clone().expect("all groups assigned"))
            .collect()
    }

    /// Remove group `j` from every global atom and drop atoms left empty.
    pub fn lift_group(&mut self, j: usize) {
        if self.assignment[j].take().is_none() {
            return;
        }
        for m in &mut self.members {
            m.retain(|&(g, _)| g != j);
        }
        if self.members.iter().all(|m| !m.is_empty()) {
            return;
        }
        let mut remap = vec![usize::MAX; self.members.len()];
        let mut next = 0;
        for (i, m) in self.members.iter().enumerate() {
            if !m.is_empty() {
                remap[i] = next;
                next += 1;
            }
        }
        self.members.retain(|m| !m.is_empty());
        for a in self.assignment.iter_mut().flatten() {
            for i in a.iter_mut() {
                *i = remap[*i];
            }
        }
    }

    /// Write back a solved assignment for a lifted group. `rows[l]` below the
    /// current atom count selects an existing atom; larger rows open new
    /// atoms, created in increasing row order.
    pub fn place_group(&mut self, j: usize, rows: &[usize]) -> Result<()> {
        if self.assignment[j].is_some() {
            return Err(Error::State(format!("group {j} is already assigned")));
        }
        if rows.len() != self.group_sizes[j] {
            return Err(Error::Dimension {
                expected: self.group_sizes[j],
                got: rows.len(),
            });
        }
        let existing = self.members.len();
        let mut fresh: Vec<usize> = rows.iter().copied().filter(|&r| r >= existing).collect();
        fresh.sort_unstable();
        let mut map = Vec::with_capacity(rows.len());
        for &r in rows {
            let i = if r < existing {
                r
            } else {
                existing + fresh.binary_search(&r).expect("collected above")
            };
            map.push(i);
        }
        self.members.resize(existing + fresh.len(), Vec::new());
        for (l, &i) in map.iter().enumerate() {
            let m = &mut self.members[i];
            let pos = m.partition_point(|&(g, _)| g < j);
            m.insert(pos, (j, l));
        }
        self.assignment[j] = Some(map);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let j_total = self.num_groups();
        for (i, m) in self.members.iter().enumerate() {
            if m.is_empty() {
                return Err(Error::State(format!("global atom {i} is empty")));
            }
            if m.len() > j_total {
                return Err(Error::State(format!("global atom {i} has count {} > J", m.len())));
            }
            if m.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(Error::State(format!(
                    "global atom {i} holds two atoms of one group or is unsorted"
                )));
            }
            for &(g, l) in m {
                match self.assignment[g].as_ref() {
                    Some(a) if a.get(l) == Some(&i) => {}
                    _ => {
                        return Err(Error::State(format!(
                            "member ({g}, {l}) of atom {i} disagrees with the group map"
                        )))
                    }
                }
            }
        }
        for (g, a) in self.assignment.iter().enumerate() {
            let Some(a) = a else { continue };
            if a.len() != self.group_sizes[g] {
                return Err(Error::State(format!("group {g} map has wrong length")));
            }
            let mut seen = vec![false; self.members.len()];
            for &i in a {
                if i >= self.members.len() || seen[i] {
                    return Err(Error::State(format!(
                        "group {g} maps two atoms to global atom {i} or out of range"
                    )));
                }
                seen[i] = true;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn groups() -> Vec<LocalGroup> {
        vec![
            LocalGroup::new(0, vec![vec![0.0], vec![1.0]]).unwrap(),
            LocalGroup::new(1, vec![vec![0.1], vec![5.0], vec![1.1]]).unwrap(),
        ]
    }

    fn hyper() -> GaussianHyper {
        GaussianHyper::new(vec![0.0], 1.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn place_and_lift_keep_invariants() {
        let g = groups();
        let mut s = GlobalState::empty(&g, hyper());
        s.place_group(0, &[1, 0]).unwrap();
        assert_eq!(s.assignment(0), Some(&[1, 0][..]));
        // existing atoms 0 and 1, new slots start at row 2
        s.place_group(1, &[1, 4, 0]).unwrap();
        s.validate().unwrap();
        assert_eq!(s.num_atoms(), 3);
        assert_eq!(s.members(0), &[(0, 1), (1, 2)]);
        assert_eq!(s.members(2), &[(1, 1)]);

        s.lift_group(0);
        s.validate().unwrap();
        assert_eq!(s.num_atoms(), 3);
        s.lift_group(1);
        assert_eq!(s.num_atoms(), 0);
        s.validate().unwrap();
    }

    #[test]
    fn pruning_remaps_other_groups() {
        let g = groups();
        let s0 = GlobalState::from_assignments(&g, &[vec![7, 3], vec![7, 9, 11]], hyper()).unwrap();
        // labels compacted: 3->0, 7->1, 9->2, 11->3
        assert_eq!(s0.labels(), vec![vec![1, 0], vec![1, 2, 3]]);
        let mut s = s0.clone();
        s.lift_group(0);
        // atom 0 (group 0 only) is pruned
        assert_eq!(s.num_atoms(), 3);
        assert_eq!(s.assignment(1), Some(&[0, 1, 2][..]));
        s.validate().unwrap();
    }

    #[test]
    fn rejects_two_atoms_of_one_group_on_one_global() {
        let g = groups();
        let err = GlobalState::from_assignments(&g, &[vec![0, 0], vec![1, 2, 3]], hyper());
        assert!(matches!(err, Err(Error::State(_))));
    }
}
