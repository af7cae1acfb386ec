//! Three-objective (loss, latency, power) dominance analysis over
//! exhaustively evaluated design spaces.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design_space::{
    count_space, enumerate_archs, enumerate_hw_configs, BackboneSpec, CodesignPoint, CountMode, HwDomain,
};
use crate::error::{Error, Result};
use crate::oracle::Oracle;

/// Default ceiling on exhaustive evaluation.
pub const DEFAULT_CAP: u64 = 1_000_000;
/// Default per-objective slack for [`verify_on_front`].
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Objective triple, all minimized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objectives<T> {
    pub ce: T,
    pub latency_ms: T,
    pub energy: T,
}

impl<T: Copy> Objectives<T> {
    pub fn new(ce: T, latency_ms: T, energy: T) -> Self {
        Self { ce, latency_ms, energy }
    }

    pub fn to_array(self) -> [T; 3] {
        [self.ce, self.latency_ms, self.energy]
    }
}

/// `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates<T: PartialOrd + Copy>(a: &Objectives<T>, b: &Objectives<T>) -> bool {
    let (a, b) = (a.to_array(), b.to_array());
    a.iter().zip(&b).all(|(x, y)| x <= y) && a.iter().zip(&b).any(|(x, y)| x < y)
}

fn lexicographic<T: PartialOrd + Copy>(a: &Objectives<T>, b: &Objectives<T>) -> std::cmp::Ordering {
    a.to_array()
        .iter()
        .zip(b.to_array().iter())
        .map(|(x, y)| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Indices of the non-dominated members of `objs`, in lexicographic
/// objective order (ties keep input order).
///
/// After a lexicographic sort a point can only be dominated by an earlier
/// one, and by transitivity some earlier frontier member then dominates it
/// too, so each point is checked against the frontier built so far.
pub fn front_indices<T: PartialOrd + Copy>(objs: &[Objectives<T>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..objs.len()).collect();
    order.sort_by(|&i, &j| lexicographic(&objs[i], &objs[j]).then(i.cmp(&j)));
    let mut front: Vec<usize> = Vec::new();
    for i in order {
        if !front.iter().any(|&f| dominates(&objs[f], &objs[i])) {
            front.push(i);
        }
    }
    front
}

/// An evaluated design with its objectives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub point: CodesignPoint,
    pub ce: f64,
    pub latency_ms: f64,
    pub energy: f64,
    pub dsp_used: u64,
    pub mem_used: u64,
    pub on_frontier: bool,
}

impl ParetoPoint {
    pub fn objectives(&self) -> Objectives<f64> {
        Objectives::new(self.ce, self.latency_ms, self.energy)
    }
}

/// The non-dominated subset, flagged, in lexicographic objective order.
pub fn pareto_front(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    let objs: Vec<_> = points.iter().map(ParetoPoint::objectives).collect();
    front_indices(&objs)
        .into_iter()
        .map(|i| ParetoPoint {
            on_frontier: true,
            ..points[i].clone()
        })
        .collect()
}

/// Sets every point's `on_frontier` flag relative to the whole slice.
pub fn mark_frontier(points: &mut [ParetoPoint]) {
    let objs: Vec<_> = points.iter().map(ParetoPoint::objectives).collect();
    points.iter_mut().for_each(|p| p.on_frontier = false);
    for i in front_indices(&objs) {
        points[i].on_frontier = true;
    }
}

/// True unless some frontier member beats `candidate` by more than
/// `epsilon` in every objective at once.
pub fn verify_on_front(candidate: &Objectives<f64>, frontier: &[ParetoPoint], epsilon: f64) -> bool {
    let c = candidate.to_array();
    !frontier.iter().any(|f| {
        f.objectives()
            .to_array()
            .iter()
            .zip(&c)
            .all(|(fv, cv)| *fv < *cv - epsilon)
    })
}

/// Evaluates every canonical architecture on every hardware configuration
/// with the oracle, in (architecture, hardware) enumeration order, and flags
/// the frontier.
pub fn exhaustive_eval(
    backbone: &BackboneSpec,
    hw_domain: &HwDomain,
    oracle: &Oracle,
    cap: u64,
) -> Result<Vec<ParetoPoint>> {
    let size = count_space(backbone, hw_domain, CountMode::DepthAware)?;
    if size > cap {
        return Err(Error::SpaceTooLarge { size, cap });
    }
    let hws = enumerate_hw_configs(hw_domain)?;
    let points: Vec<CodesignPoint> = enumerate_archs(backbone)
        .into_iter()
        .flat_map(|arch| {
            hws.iter().map(move |&hw| CodesignPoint {
                arch: arch.clone(),
                hw,
            })
        })
        .collect();
    let mut evaluated = points
        .into_par_iter()
        .map(|point| {
            let e = oracle.evaluate(&point)?;
            Ok(ParetoPoint {
                point,
                ce: e.ce,
                latency_ms: e.latency_ms,
                energy: e.power_w,
                dsp_used: e.resources.dsp_used,
                mem_used: e.resources.mem_used,
                on_frontier: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    mark_frontier(&mut evaluated);
    Ok(evaluated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::OracleConfig;

    fn o(a: f64, b: f64, c: f64) -> Objectives<f64> {
        Objectives::new(a, b, c)
    }

    #[test]
    fn dominance_cases() {
        assert!(dominates(&o(1.0, 2.0, 3.0), &o(2.0, 3.0, 4.0)));
        assert!(!dominates(&o(1.0, 2.0, 3.0), &o(1.0, 2.0, 3.0)));
        assert!(!dominates(&o(1.0, 5.0, 3.0), &o(2.0, 2.0, 3.0)));
        assert!(!dominates(&o(2.0, 2.0, 3.0), &o(1.0, 5.0, 3.0)));
        assert!(dominates(&o(1.0, 2.0, 3.0), &o(1.0, 2.0, 3.5)));
    }

    #[test]
    fn simple_fronts() {
        assert_eq!(front_indices(&[o(2.0, 2.0, 2.0), o(1.0, 1.0, 1.0)]), vec![1]);
        let same = vec![o(1.0, 1.0, 1.0); 4];
        assert_eq!(front_indices(&same), vec![0, 1, 2, 3]);
    }

    #[test]
    fn generic_over_precision() {
        let f = front_indices(&[Objectives::<f32>::new(1.0, 3.0, 1.0), Objectives::new(2.0, 1.0, 1.0)]);
        assert_eq!(f, vec![0, 1]);
    }

    #[test]
    fn verify_cases() {
        let oracle = Oracle::new(BackboneSpec::resnet50_prefix(1, 2, 2), OracleConfig::default());
        let one = HwDomain { pf: vec![8], pc: vec![8], pv: vec![4], bw: vec![64], mem: vec![1 << 22] };
        let pts = exhaustive_eval(&oracle.backbone, &one, &oracle, DEFAULT_CAP).unwrap();
        let front = pareto_front(&pts);
        assert!(verify_on_front(&front[0].objectives(), &front, 1e-6));
        let worse = front[0].objectives();
        let worse = o(worse.ce + 1.0, worse.latency_ms + 1.0, worse.energy + 1.0);
        assert!(!verify_on_front(&worse, &front, 1e-6));
    }

    #[test]
    fn exhaustive_single_block() {
        let b = BackboneSpec::resnet50_prefix(1, 2, 2);
        let oracle = Oracle::new(b.clone(), OracleConfig::default());
        let one = HwDomain { pf: vec![8], pc: vec![8], pv: vec![4], bw: vec![64], mem: vec![1 << 22] };
        let pts = exhaustive_eval(&b, &one, &oracle, DEFAULT_CAP).unwrap();
        assert_eq!(pts.len(), 9);
        let empty = HwDomain { pf: vec![], ..one.clone() };
        assert!(exhaustive_eval(&b, &empty, &oracle, DEFAULT_CAP).is_err());
        assert!(matches!(
            exhaustive_eval(&b, &one, &oracle, 8),
            Err(Error::SpaceTooLarge { size: 9, cap: 8 })
        ));
    }
}
