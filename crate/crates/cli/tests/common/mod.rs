//! Fixtures shared by the integration test binaries. Each binary
//! compiles this module separately and uses a subset of it.
#![allow(dead_code)]

use std::path::Path;

use lbm::config::{BcSpec, InitSpec, Physics, ReactionSpec, SimulationConfig};
use lbm::task::{AcceptanceCheck, TaskSpec};

/// Small periodic advection task whose acceptance holds for an exact
/// analytic writer: peak checks only, no conservation bound (analytic
/// snapshots carry a periodic-image truncation of about 1e-5).
pub fn toy_task() -> TaskSpec {
    TaskSpec {
        name: "toy_ad".into(),
        equations: "dphi/dt + u . grad(phi) = D * laplacian(phi), u = (0.1, 0), D = 0.02".into(),
        algorithm: "Advect and diffuse a periodic Gaussian; the peak drifts with u and \
decays as sigma^2 / (sigma^2 + 2 D t)."
            .into(),
        tester_notes: "Write the initial state and the state after 100 steps.".into(),
        config: SimulationConfig {
            nx: 32,
            ny: 32,
            steps: 100,
            physics: Physics::Scalar {
                diffusivity: 0.02,
                velocity: (0.1, 0.0),
                reaction: ReactionSpec::None,
            },
            bc: [BcSpec::Periodic; 4],
            init: InitSpec::Gaussian { sigma: 3.0 },
            output_every: 100,
            output_dir: "output".into(),
        },
        acceptance: vec![
            AcceptanceCheck {
                name: "peak_amplitude_rel_err".into(),
                threshold: 0.02,
            },
            AcceptanceCheck {
                name: "peak_position_err".into(),
                threshold: 1.0,
            },
        ],
    }
}

/// Python module that writes exact analytic snapshots of the toy task in
/// the snapshot and manifest formats the oracle reads.
pub const ANALYTIC_WRITER: &str = r##"import hashlib
import json
import math

NX = NY = 32
SIGMA_SQ = 9.0
DIFFUSIVITY = 0.02
UX, UY = 0.1, 0.0
CX = CY = 16.0


def wrap(delta, n):
    return (delta + n / 2.0) % n - n / 2.0


def field(t):
    s_sq = SIGMA_SQ + 2.0 * DIFFUSIVITY * t
    amp = SIGMA_SQ / s_sq
    cx, cy = CX + UX * t, CY + UY * t
    values = []
    for y in range(NY):
        for x in range(NX):
            dx, dy = wrap(x - cx, NX), wrap(y - cy, NY)
            values.append(amp * math.exp(-(dx * dx + dy * dy) / (2.0 * s_sq)))
    return values


def write_snapshot(name, values):
    lines = [
        "# vtk DataFile Version 3.0",
        "snapshot",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        "DIMENSIONS %d %d 1" % (NX, NY),
        "ORIGIN 0 0 0",
        "SPACING 1 1 1",
        "POINT_DATA %d" % (NX * NY),
        "SCALARS phi double",
        "LOOKUP_TABLE default",
    ]
    lines.extend(repr(v) for v in values)
    text = "\n".join(lines) + "\n"
    with open(name, "w") as handle:
        handle.write(text)
    return hashlib.sha256(text.encode()).hexdigest()


def run(steps):
    entries = []
    for t in (0, steps):
        name = "toy_%06d.vtk" % t
        checksum = write_snapshot(name, field(t))
        entries.append({
            "timestep": t,
            "filename": name,
            "field_names": ["phi"],
            "checksum": checksum,
        })
    with open("manifest.json", "w") as handle:
        json.dump(entries, handle, indent=1)
    return entries
"##;

pub const GOOD_TESTER: &str = r#"import analytic_writer

entries = analytic_writer.run(100)
print("wrote", len(entries), "snapshots")
"#;

/// Completion text for an artifact made of `files`.
pub fn completion(files: &[(&str, &str)]) -> String {
    let mut out = String::new();
    for (name, body) in files {
        out.push_str(&format!("FILE: {name}\n```\n{body}```\n\n"));
    }
    out
}

pub fn good_completion() -> String {
    completion(&[
        ("analytic_writer.py", ANALYTIC_WRITER),
        ("test_case.py", GOOD_TESTER),
    ])
}

pub fn broken_completion() -> String {
    completion(&[
        ("analytic_writer.py", ANALYTIC_WRITER),
        (
            "test_case.py",
            "import analytic_writer\n\nprint(undefined_name)\n",
        ),
    ])
}

/// Analytic writer with the drift removed: runs cleanly, fails
/// validation as a missing-advection misinterpretation.
pub fn stationary_completion() -> String {
    let writer = ANALYTIC_WRITER.replace("UX, UY = 0.1, 0.0", "UX, UY = 0.0, 0.0");
    completion(&[("analytic_writer.py", &writer), ("test_case.py", GOOD_TESTER)])
}

pub fn write_fixture(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).expect("write fixture");
}
