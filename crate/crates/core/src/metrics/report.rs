use std::fmt::Write as _;

use super::distance::*;
use crate::error::Result;

/// Points sampled from a surface, optionally with unit normals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SurfaceSample {
    pub points: Vec<[f64; 3]>,
    pub normals: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeParams {
    pub epsilon: f64,
    pub sigma: f64,
}

impl Default for EdgeParams {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            sigma: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub fscore_threshold: f64,
    /// Edge Chamfer distance is computed only when set (needs normals on both sides).
    pub edges: Option<EdgeParams>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            fscore_threshold: 0.01,
            edges: None,
        }
    }
}

/// One-sided values measure reference -> prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub cd_l1: f64,
    pub cd_l2: f64,
    pub hausdorff: f64,
    pub one_sided_cd: f64,
    pub one_sided_hd: f64,
    pub normal_consistency: Option<f64>,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub fscore_threshold: f64,
    pub ecd: Option<EdgeChamfer>,
    pub edge_params: Option<EdgeParams>,
    pub pred_samples: usize,
    pub gt_samples: usize,
}

pub fn evaluate(pred: &SurfaceSample, gt: &SurfaceSample, opts: &EvalOptions) -> Result<MetricsReport> {
    let (p, g) = (&pred.points[..], &gt.points[..]);
    let f = f_score(p, g, opts.fscore_threshold)?;
    let normal_consistency = match (&pred.normals, &gt.normals) {
        (Some(pn), Some(gn)) => Some(normal_consistency(p, pn, g, gn)?),
        _ => None,
    };
    let ecd = match (opts.edges, &pred.normals, &gt.normals) {
        (Some(e), Some(pn), Some(gn)) => Some(edge_chamfer(p, pn, g, gn, e.epsilon, e.sigma)?),
        _ => None,
    };
    Ok(MetricsReport {
        cd_l1: chamfer(p, g, ChamferOrder::L1)?,
        cd_l2: chamfer(p, g, ChamferOrder::L2)?,
        hausdorff: hausdorff(p, g)?,
        one_sided_cd: one_sided_chamfer(g, p, ChamferOrder::L1)?,
        one_sided_hd: one_sided_hausdorff(g, p)?,
        normal_consistency,
        precision: f.precision,
        recall: f.recall,
        f_score: f.f_score,
        fscore_threshold: opts.fscore_threshold,
        edge_params: ecd.as_ref().and(opts.edges),
        ecd,
        pred_samples: p.len(),
        gt_samples: g.len(),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "na".to_string(), |x| format!("{x:e}"))
}

impl MetricsReport {
    fn fields(&self) -> Vec<(&'static str, String)> {
        let ecd = self.ecd.as_ref();
        vec![
            ("cd_l1", format!("{:e}", self.cd_l1)),
            ("cd_l2", format!("{:e}", self.cd_l2)),
            ("cd_l2_x100", format!("{:e}", self.cd_l2 * 100.0)),
            ("cd_l2_x1000", format!("{:e}", self.cd_l2 * 1000.0)),
            ("hausdorff", format!("{:e}", self.hausdorff)),
            ("one_sided_cd", format!("{:e}", self.one_sided_cd)),
            ("one_sided_hd", format!("{:e}", self.one_sided_hd)),
            ("normal_consistency", opt(self.normal_consistency)),
            ("precision", format!("{:e}", self.precision)),
            ("recall", format!("{:e}", self.recall)),
            ("f_score", format!("{:e}", self.f_score)),
            ("fscore_threshold", format!("{}", self.fscore_threshold)),
            ("ecd_l1", opt(ecd.map(|e| e.l1))),
            ("ecd_l2", opt(ecd.map(|e| e.l2))),
            ("ecd_pred_edges", ecd.map_or("na".into(), |e| e.pred_edges.to_string())),
            ("ecd_gt_edges", ecd.map_or("na".into(), |e| e.gt_edges.to_string())),
            ("ecd_fallback", ecd.map_or("na".into(), |e| e.fallback.to_string())),
            ("ecd_epsilon", opt(self.edge_params.map(|e| e.epsilon))),
            ("ecd_sigma", opt(self.edge_params.map(|e| e.sigma))),
            ("pred_samples", self.pred_samples.to_string()),
            ("gt_samples", self.gt_samples.to_string()),
        ]
    }

    /// One `key=value` line per field.
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.fields() {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    pub fn csv_header(&self) -> String {
        self.fields().iter().map(|(k, _)| *k).collect::<Vec<_>>().join(",")
    }

    pub fn csv_row(&self) -> String {
        self.fields().into_iter().map(|(_, v)| v).collect::<Vec<_>>().join(",")
    }
}
