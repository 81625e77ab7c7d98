//! Two-phase Louvain community detection on the weighted retweet graph.
//! Local moves are accepted only above a small positive modularity gain;
//! phases repeat until no move improves, with the node visit order shuffled
//! by the seed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::rng::SplitMix64;

use super::RetweetGraph;

const MIN_GAIN: f64 = 1e-7;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Partition {
    /// Community id per graph node index, renumbered 0..n_communities.
    pub assignment: Vec<u32>,
    pub n_communities: usize,
    pub modularity: f64,
    /// Modularity after each completed phase; non-decreasing.
    pub phase_modularity: Vec<f64>,
}

/// Aggregated graph level: adjacency maps with the self-loop entry already
/// doubled, so degree(i) = sum of row i.
struct Level {
    adj: Vec<BTreeMap<usize, f64>>,
}

impl Level {
    fn n(&self) -> usize {
        self.adj.len()
    }

    fn degrees(&self) -> Vec<f64> {
        self.adj.iter().map(|row| row.values().sum()).collect()
    }

    fn modularity(&self, comm: &[usize]) -> f64 {
        let degrees = self.degrees();
        let two_m: f64 = degrees.iter().sum();
        if two_m == 0.0 {
            return 0.0;
        }
        // sum of intra-community adjacency minus the degree null model
        let mut intra = 0.0;
        for (i, row) in self.adj.iter().enumerate() {
            for (&j, &w) in row {
                if comm[i] == comm[j] {
                    intra += w;
                }
            }
        }
        let mut comm_degree: BTreeMap<usize, f64> = BTreeMap::new();
        for (i, d) in degrees.iter().enumerate() {
            *comm_degree.entry(comm[i]).or_default() += d;
        }
        let null: f64 = comm_degree.values().map(|d| d * d).sum();
        intra / two_m - null / (two_m * two_m)
    }

    /// One local-move phase. Returns (community per node, any_moved).
    fn local_phase(&self, rng: &mut SplitMix64) -> (Vec<usize>, bool) {
        let n = self.n();
        let degrees = self.degrees();
        let two_m: f64 = degrees.iter().sum();
        let m = two_m / 2.0;
        let mut comm: Vec<usize> = (0..n).collect();
        let mut comm_total: Vec<f64> = degrees.clone();
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        let mut moved_any = false;

        if m <= 0.0 {
            return (comm, false);
        }

        loop {
            let mut moved = 0usize;
            for &i in &order {
                let current = comm[i];
                // weights from i to each neighboring community (self-loop
                // excluded: it moves with the node and cancels in the gain)
                let mut to_comm: BTreeMap<usize, f64> = BTreeMap::new();
                for (&j, &w) in &self.adj[i] {
                    if j != i {
                        *to_comm.entry(comm[j]).or_default() += w;
                    }
                }
                comm_total[current] -= degrees[i];
                let gain = |c: usize| -> f64 {
                    let k_in = to_comm.get(&c).copied().unwrap_or(0.0);
                    k_in / m - degrees[i] * comm_total[c] / (2.0 * m * m)
                };
                let stay = gain(current);
                let mut best_comm = current;
                let mut best_gain = stay;
                for &c in to_comm.keys() {
                    if c == current {
                        continue;
                    }
                    let g = gain(c);
                    if g > best_gain + MIN_GAIN {
                        best_gain = g;
                        best_comm = c;
                    }
                }
                comm_total[best_comm] += degrees[i];
                if best_comm != current {
                    comm[i] = best_comm;
                    moved += 1;
                }
            }
            if moved == 0 {
                break;
            }
            moved_any = true;
        }
        (comm, moved_any)
    }

    /// Collapse communities into supernodes, keeping the doubled-diagonal
    /// convention so modularity is preserved.
    fn aggregate(&self, comm: &[usize]) -> (Level, Vec<usize>) {
        let mut renumber: BTreeMap<usize, usize> = BTreeMap::new();
        for &c in comm {
            let next = renumber.len();
            renumber.entry(c).or_insert(next);
        }
        let n_new = renumber.len();
        let mut adj: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n_new];
        for (i, row) in self.adj.iter().enumerate() {
            let ci = renumber[&comm[i]];
            for (&j, &w) in row {
                let cj = renumber[&comm[j]];
                // row sums stay intact: off-diagonal pairs appear twice in
                // the input (i->j and j->i) and merge onto the diagonal.
                *adj[ci].entry(cj).or_default() += w;
            }
        }
        let mapping: Vec<usize> = comm.iter().map(|c| renumber[c]).collect();
        (Level { adj }, mapping)
    }
}

fn level_from_graph(graph: &RetweetGraph) -> Level {
    let mut adj: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); graph.n_nodes()];
    for i in 0..graph.n_nodes() {
        for &(j, w) in graph.neighbors(i) {
            adj[i].insert(j as usize, w);
        }
    }
    Level { adj }
}

/// Modularity of an assignment on the full graph.
pub fn modularity(graph: &RetweetGraph, assignment: &[u32]) -> f64 {
    let comm: Vec<usize> = assignment.iter().map(|&c| c as usize).collect();
    level_from_graph(graph).modularity(&comm)
}

/// Standard two-phase Louvain at resolution 1.0.
pub fn louvain_communities(graph: &RetweetGraph, seed: u64) -> Partition {
    let n = graph.n_nodes();
    if n == 0 {
        return Partition {
            assignment: Vec::new(),
            n_communities: 0,
            modularity: 0.0,
            phase_modularity: Vec::new(),
        };
    }
    let mut rng = SplitMix64::new(seed);
    let mut level = level_from_graph(graph);
    // node -> community through all levels so far
    let mut membership: Vec<usize> = (0..n).collect();
    let mut phase_modularity = Vec::new();

    for _phase in 0..64 {
        let (comm, moved) = level.local_phase(&mut rng);
        let (aggregated, mapping) = level.aggregate(&comm);
        for slot in membership.iter_mut() {
            *slot = mapping[*slot];
        }
        phase_modularity.push(aggregated.modularity(&(0..aggregated.n()).collect::<Vec<_>>()));
        level = aggregated;
        if !moved {
            break;
        }
    }

    // Renumber communities in node order for a stable labeling.
    let mut renumber: BTreeMap<usize, u32> = BTreeMap::new();
    let mut assignment = Vec::with_capacity(n);
    for &c in &membership {
        let next = renumber.len() as u32;
        let id = *renumber.entry(c).or_insert(next);
        assignment.push(id);
    }
    let q = modularity(graph, &assignment);
    Partition {
        assignment,
        n_communities: renumber.len(),
        modularity: q,
        phase_modularity,
    }
}
