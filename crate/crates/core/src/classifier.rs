//! Decision procedure for orientational and topological conjugacy of the
//! dynamics of two random circle homeomorphisms over the same noise.

use crate::conjugacy::{
    coupled_attractor_graph, graph_homeomorphism_test, lift_factor_conjugacy, GraphTest,
};
use crate::dynamics::derive_seed;
use crate::error::{Error, Result};
use crate::family::Family;
use crate::scalar::Real;
use crate::structure::{estimate_minimal_structure, AntonovCase, McParams, MinimalStructure};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    Yes,
    No,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseLabel {
    #[serde(rename = "a")]
    A,
    #[serde(rename = "b")]
    B,
    #[serde(rename = "c")]
    C,
    #[serde(rename = "d")]
    D,
    #[serde(rename = "none")]
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TopCaseLabel {
    #[serde(rename = "a'")]
    A,
    #[serde(rename = "b'")]
    B,
    #[serde(rename = "c'")]
    C,
    #[serde(rename = "none")]
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierParams {
    pub seed: u64,
    pub mc: McParams,
    /// Shared windows for the coupled-attractor graph.
    pub n_windows: usize,
    pub n_pull: usize,
    pub fit_tol: f64,
    /// With fewer graph points than this a "no" becomes "inconclusive".
    pub evidence_floor: usize,
    pub lift_grid: usize,
    pub lift_tol: f64,
    pub n_alpha: usize,
    pub rotation_samples: usize,
    pub rotation_yes: f64,
    pub rotation_no: f64,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        ClassifierParams {
            seed: 0,
            mc: McParams::default(),
            n_windows: 200,
            n_pull: 300,
            fit_tol: 5e-3,
            evidence_floor: 200,
            lift_grid: 4096,
            lift_tol: 5e-3,
            n_alpha: 16,
            rotation_samples: 1000,
            rotation_yes: 1e-8,
            rotation_no: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphEvidence {
    pub points: usize,
    pub windows: usize,
    pub skipped: usize,
    pub curve: bool,
    pub orientation: Option<i8>,
    pub fit_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftEvidence {
    pub found: bool,
    pub offset: Option<u32>,
    pub residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Evidence<T: Real> {
    pub structure_f: Option<MinimalStructure<T>>,
    pub structure_g: Option<MinimalStructure<T>>,
    pub graph: Option<GraphEvidence>,
    pub lift: Option<LiftEvidence>,
    /// `sup dist(s_f(α), s_g(α))` in the rotation case.
    pub rotation_gap: Option<f64>,
    /// Orientational verdict against the mirror of `g`.
    pub mirrored: Option<Box<Verdict<T>>>,
}

impl<T: Real> Default for Evidence<T> {
    fn default() -> Self {
        Evidence {
            structure_f: None,
            structure_g: None,
            graph: None,
            lift: None,
            rotation_gap: None,
            mirrored: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Verdict<T: Real> {
    pub orientational: Answer,
    pub topological: Answer,
    pub case_label: CaseLabel,
    pub top_case_label: TopCaseLabel,
    pub evidence: Evidence<T>,
    pub notes: Vec<String>,
}

impl<T: Real> Verdict<T> {
    fn new(orientational: Answer, case_label: CaseLabel, evidence: Evidence<T>, notes: Vec<String>) -> Self {
        Verdict {
            orientational,
            topological: if orientational == Answer::Yes {
                Answer::Yes
            } else {
                Answer::Inconclusive
            },
            case_label,
            top_case_label: TopCaseLabel::None,
            evidence,
            notes,
        }
    }

    /// One-paragraph human-readable summary.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "orientational: {:?} (case {:?})\ntopological: {:?} (case {:?})\n",
            self.orientational, self.case_label, self.topological, self.top_case_label
        )
        .to_lowercase();
        for (name, st) in [("f", &self.evidence.structure_f), ("g", &self.evidence.structure_g)] {
            if let Some(st) = st {
                s.push_str(&format!(
                    "{name}: k={} l={} whole_circle={} symmetry_order={} antonov={:?}\n",
                    st.k, st.l, st.whole_circle, st.symmetry_order, st.antonov_case
                ));
            }
        }
        for n in &self.notes {
            s.push_str("note: ");
            s.push_str(n);
            s.push('\n');
        }
        s
    }
}

/// Orientational-conjugacy decision tree.
pub fn classify_orientational<T: Real>(
    fam_f: &Family<T>,
    fam_g: &Family<T>,
    params: &ClassifierParams,
) -> Result<Verdict<T>> {
    if fam_f.noise() != fam_g.noise() {
        return Err(Error::Usage(
            "the two families are driven by different noise models; conjugacy needs a common noise".into(),
        ));
    }
    let mut ev = Evidence::default();
    let mut notes = Vec::new();
    let mc = McParams {
        seed: params.seed,
        ..params.mc.clone()
    };
    let sf = match estimate_minimal_structure(fam_f, &mc) {
        Ok(s) => s,
        Err(e) => {
            notes.push(format!("structure of f: {e}"));
            return Ok(Verdict::new(Answer::Inconclusive, CaseLabel::None, ev, notes));
        }
    };
    let sg = match estimate_minimal_structure(fam_g, &mc) {
        Ok(s) => s,
        Err(e) => {
            ev.structure_f = Some(sf);
            notes.push(format!("structure of g: {e}"));
            return Ok(Verdict::new(Answer::Inconclusive, CaseLabel::None, ev, notes));
        }
    };
    ev.structure_f = Some(sf.clone());
    ev.structure_g = Some(sg.clone());

    if sf.k != sg.k {
        notes.push(format!("component counts differ ({} vs {})", sf.k, sg.k));
        return Ok(Verdict::new(Answer::No, CaseLabel::None, ev, notes));
    }
    if sf.k >= 2 {
        return Ok(if sf.l == sg.l {
            Verdict::new(Answer::Yes, CaseLabel::A, ev, notes)
        } else {
            notes.push(format!("rotation indices differ ({} vs {})", sf.l, sg.l));
            Verdict::new(Answer::No, CaseLabel::None, ev, notes)
        });
    }

    let rot_f = sf.antonov_case == AntonovCase::Rotation;
    let rot_g = sg.antonov_case == AntonovCase::Rotation;
    if rot_f && rot_g {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, 0x707));
        let mut gap = T::zero();
        for _ in 0..params.rotation_samples {
            let a = fam_f.noise().sample(&mut rng);
            gap = gap.max(fam_f.shift_at(&a).dist(fam_g.shift_at(&a)));
        }
        let gap = gap.as_f64();
        ev.rotation_gap = Some(gap);
        let answer = if gap < params.rotation_yes {
            Answer::Yes
        } else if gap > params.rotation_no {
            Answer::No
        } else {
            notes.push(format!("rotation shifts differ by {gap:e}, between the yes and no thresholds"));
            Answer::Inconclusive
        };
        if answer == Answer::No {
            notes.push("random rotations are conjugate only when equal".into());
        }
        let label = if answer == Answer::Yes { CaseLabel::C } else { CaseLabel::None };
        return Ok(Verdict::new(answer, label, ev, notes));
    }
    if rot_f != rot_g {
        notes.push("exactly one family is a random rotation".into());
        return Ok(Verdict::new(Answer::No, CaseLabel::None, ev, notes));
    }

    let (mf, mg) = (sf.symmetry_order, sg.symmetry_order);
    if mf == 1 && mg == 1 {
        return Ok(Verdict::new(Answer::Yes, CaseLabel::B, ev, notes));
    }
    if mf != mg {
        notes.push(format!("symmetry orders differ ({mf} vs {mg})"));
        return Ok(Verdict::new(Answer::No, CaseLabel::None, ev, notes));
    }
    let m = mf;
    let cloud = match coupled_attractor_graph(fam_f, fam_g, m, params.n_windows, params.n_pull, params.seed) {
        Ok(c) => c,
        Err(e) => {
            notes.push(format!("coupled-attractor graph: {e}"));
            return Ok(Verdict::new(Answer::Inconclusive, CaseLabel::None, ev, notes));
        }
    };
    let test = match graph_homeomorphism_test(&cloud.points, params.fit_tol) {
        Ok(t) => t,
        Err(e) => {
            notes.push(format!("graph test: {e}"));
            return Ok(Verdict::new(Answer::Inconclusive, CaseLabel::None, ev, notes));
        }
    };
    ev.graph = Some(GraphEvidence {
        points: cloud.points.len(),
        windows: cloud.windows,
        skipped: cloud.skipped,
        curve: matches!(test, GraphTest::Curve { .. }),
        orientation: match &test {
            GraphTest::Curve { orientation, .. } => Some(*orientation),
            GraphTest::NotACurve { .. } => None,
        },
        fit_residual: test.fit_residual().as_f64(),
    });
    let weak = cloud.points.len() < params.evidence_floor;
    let no = |mut notes: Vec<String>, ev: Evidence<T>, why: String| {
        notes.push(why);
        if weak {
            notes.push(format!(
                "only {} graph points, below the evidence floor of {}",
                cloud.points.len(),
                params.evidence_floor
            ));
            Verdict::new(Answer::Inconclusive, CaseLabel::None, ev, notes)
        } else {
            Verdict::new(Answer::No, CaseLabel::None, ev, notes)
        }
    };
    let map = match test {
        GraphTest::NotACurve { fit_residual, .. } => {
            return Ok(no(
                notes,
                ev,
                format!("factor attractors do not lie on a homeomorphism graph (fit residual {:e})", fit_residual.as_f64()),
            ))
        }
        GraphTest::Curve { map, .. } => map,
    };
    if m >= 3 && map.orientation < 0 {
        return Ok(no(
            notes,
            ev,
            format!("factor conjugacy reverses orientation, which cannot lift for symmetry order {m}"),
        ));
    }
    let lifted = match lift_factor_conjugacy(
        fam_f,
        fam_g,
        m,
        &map,
        params.lift_grid,
        params.lift_tol,
        params.n_alpha,
    ) {
        Ok(l) => l,
        Err(e) => {
            notes.push(format!("lift: {e}"));
            return Ok(Verdict::new(Answer::Inconclusive, CaseLabel::None, ev, notes));
        }
    };
    ev.lift = Some(LiftEvidence {
        found: lifted.is_some(),
        offset: lifted.as_ref().map(|l| l.offset),
        residual: lifted.as_ref().map(|l| l.residual.as_f64()),
    });
    match lifted {
        Some(l) => {
            if l.kappa.orientation < 0 {
                notes.push("deterministic conjugacy reverses orientation (order-2 symmetry case)".into());
            }
            let label = if m >= 3 { CaseLabel::C } else { CaseLabel::D };
            Ok(Verdict::new(Answer::Yes, label, ev, notes))
        }
        None => Ok(no(notes, ev, "no rotational offset of the lifted factor conjugacy conjugates the maps".into())),
    }
}

/// Topological conjugacy: orientational against `g` or against its mirror.
pub fn classify_topological<T: Real>(
    fam_f: &Family<T>,
    fam_g: &Family<T>,
    params: &ClassifierParams,
) -> Result<Verdict<T>> {
    let direct = classify_orientational(fam_f, fam_g, params)?;
    let mirrored = classify_orientational(fam_f, &fam_g.mirror(), params)?;
    let topological = match (direct.orientational, mirrored.orientational) {
        (Answer::Yes, _) | (_, Answer::Yes) => Answer::Yes,
        (Answer::No, Answer::No) => Answer::No,
        _ => Answer::Inconclusive,
    };
    let top_case_label = if topological != Answer::Yes {
        TopCaseLabel::None
    } else {
        match (&direct.evidence.structure_f, &direct.evidence.structure_g) {
            (Some(sf), Some(sg)) if sf.k >= 2 && (sg.l == sf.l || sg.l == (sf.k - sf.l) % sf.k) => TopCaseLabel::A,
            (Some(sf), Some(sg)) if sf.k == 1 && sf.symmetry_order == 1 && sg.symmetry_order == 1 => {
                TopCaseLabel::B
            }
            (Some(sf), _) if sf.k == 1 => TopCaseLabel::C,
            _ => TopCaseLabel::None,
        }
    };
    let mut v = direct;
    v.topological = topological;
    v.top_case_label = top_case_label;
    v.evidence.mirrored = Some(Box::new(mirrored));
    Ok(v)
}
