//! Aggregation of ill-posed cut elements into well-posed neighbours.

use std::io::Write;

use super::cut::CutMesh;
use super::merge::merge_groups;
use crate::error::{Error, Result};
use crate::mesh::geometry::{diameter, perimeter, signed_area};
use crate::mesh::PolyMesh;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AggregationMode {
    /// Only `|T| / |dT| < eps1 h_T` triggers a merge.
    Sliver,
    /// Sliver or `h_T < eps2 h_max`.
    Full,
}

#[derive(Clone, Copy, Debug)]
pub struct AggregationParams {
    pub eps1: f64,
    pub eps2: f64,
    pub mode: AggregationMode,
}

impl Default for AggregationParams {
    fn default() -> Self {
        Self {
            eps1: 0.05,
            eps2: 0.3,
            mode: AggregationMode::Full,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trigger {
    Sliver,
    Small,
}

/// One merge decision, in the numbering of the mesh of its pass.
#[derive(Clone, Debug)]
pub struct AggregationStep {
    pub pass: usize,
    pub element: usize,
    pub target: usize,
    pub trigger: Trigger,
    pub shared_face_length: f64,
}

#[derive(Clone, Debug, Default)]
pub struct AggregationPlan {
    pub steps: Vec<AggregationStep>,
    pub passes: usize,
}

impl AggregationPlan {
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "pass,element,target,trigger,shared_face_length")?;
        for s in &self.steps {
            let t = match s.trigger {
                Trigger::Sliver => "sliver",
                Trigger::Small => "small",
            };
            writeln!(out, "{},{},{},{t},{:e}", s.pass, s.element, s.target, s.shared_face_length)?;
        }
        Ok(())
    }
}

/// Ill-posedness of element `e` of a cut mesh, if any.
pub fn trigger(mesh: &PolyMesh, e: usize, h_ref: f64, params: &AggregationParams) -> Option<Trigger> {
    let p = mesh.element_polygon(e);
    let h = diameter(&p);
    if signed_area(&p) / perimeter(&p) < params.eps1 * h {
        return Some(Trigger::Sliver);
    }
    if params.mode == AggregationMode::Full && h < params.eps2 * h_ref {
        return Some(Trigger::Small);
    }
    None
}

/// Merges every ill-posed cut element into the neighbour sharing its longest
/// face (ties to the lowest index) and repeats until no cut element is
/// ill-posed. The reference size is the background cell diameter, so applying
/// the function to its own output changes nothing.
pub fn aggregate(input: &CutMesh, params: AggregationParams) -> Result<(CutMesh, AggregationPlan)> {
    let h_ref = input.background_diameter;
    let mut cur = input.clone();
    let mut plan = AggregationPlan::default();
    let limit = input.cut.iter().filter(|c| **c).count() + 1;
    for pass in 0..limit {
        let mesh = &cur.mesh;
        let ne = mesh.num_elements();
        let mut parent: Vec<usize> = (0..ne).collect();
        let mut any = false;
        for e in 0..ne {
            if !cur.cut[e] {
                continue;
            }
            let Some(t) = trigger(mesh, e, h_ref, &params) else {
                continue;
            };
            let mut best: Option<(usize, f64)> = None;
            for r in mesh.element_faces(e) {
                let els = mesh.face_elements(r.face);
                if els.len() != 2 {
                    continue;
                }
                let other = if els[0] == e { els[1] } else { els[0] };
                let len = mesh.face_length(r.face);
                let better = match best {
                    None => true,
                    Some((o, l)) => len > l || (len == l && other < o),
                };
                if better {
                    best = Some((other, len));
                }
            }
            let (target, len) = best.ok_or_else(|| {
                Error::Aggregation(format!("ill-posed element {e} has no neighbour"))
            })?;
            plan.steps.push(AggregationStep {
                pass,
                element: e,
                target,
                trigger: t,
                shared_face_length: len,
            });
            union(&mut parent, e, target);
            any = true;
        }
        if !any {
            plan.passes = pass;
            return Ok((cur, plan));
        }
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); ne];
        for e in 0..ne {
            let r = find(&mut parent, e);
            groups[r].push(e);
        }
        let groups: Vec<Vec<usize>> = groups.into_iter().filter(|g| !g.is_empty()).collect();
        let merged = merge_groups(mesh, &groups)?;
        // merged elements are ordered by smallest constituent
        let mut sorted = groups.clone();
        sorted.sort_by_key(|g| *g.iter().min().unwrap());
        let cut = sorted
            .iter()
            .map(|g| g.iter().any(|e| cur.cut[*e]))
            .collect();
        cur = CutMesh {
            mesh: merged,
            cut,
            background_diameter: h_ref,
        };
    }
    Err(Error::Aggregation(format!(
        "no fixed point after {limit} passes"
    )))
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi] = lo;
    }
}

/// Ill-posed cut elements remaining in a mesh.
pub fn scan(cm: &CutMesh, params: &AggregationParams) -> Vec<(usize, Trigger)> {
    (0..cm.mesh.num_elements())
        .filter(|e| cm.cut[*e])
        .filter_map(|e| trigger(&cm.mesh, e, cm.background_diameter, params).map(|t| (e, t)))
        .collect()
}
