use std::fmt::Write;

use thiserror::Error;

use super::{Assembly, DefectKind, DefectLabel};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("assembly JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported assembly version {0}")]
    Version(u32),
}

/// Pretty JSON with a fixed key order.
pub fn export_assembly(a: &Assembly) -> String {
    serde_json::to_string_pretty(a).expect("assembly serializes") + "\n"
}

pub fn import_assembly(text: &str) -> Result<Assembly, ExportError> {
    let a: Assembly = serde_json::from_str(text)?;
    if a.version != 1 {
        return Err(ExportError::Version(a.version));
    }
    Ok(a)
}

/// Wavefront-style line export: one `l` polyline per defect, preceded by a
/// comment naming its kind. Closed defects repeat their first vertex.
pub fn export_obj(a: &Assembly) -> String {
    let mut out = String::from("# defect-forge assembly\n");
    let mut next = 1usize;
    for (i, d) in a.defects.iter().enumerate() {
        let kind = match d.kind {
            DefectKind::Primal => "primal",
            DefectKind::Dual => "dual",
        };
        let role = match &d.label {
            DefectLabel::Rail { episode } => format!("rail episode {episode}"),
            DefectLabel::Braid { cnot } => format!("braid cnot {cnot}"),
        };
        let _ = writeln!(out, "# defect {i} {kind} {role}");
        let _ = writeln!(out, "o defect_{i}_{kind}");
        for p in &d.path {
            let _ = writeln!(out, "v {} {} {}", p.x, p.y, p.z);
        }
        let mut idx: Vec<usize> = (next..next + d.path.len()).collect();
        if d.closed && !idx.is_empty() {
            idx.push(next);
        }
        next += d.path.len();
        if idx.len() > 1 {
            let line: Vec<String> = idx.iter().map(|k| k.to_string()).collect();
            let _ = writeln!(out, "l {}", line.join(" "));
        }
    }
    for (i, b) in a.boxes.iter().enumerate() {
        let _ = writeln!(
            out,
            "# box {i} {} origin {} {} {} dims {} {} {} {}",
            b.state_kind.label(),
            b.origin.x,
            b.origin.y,
            b.origin.z,
            b.dims[0],
            b.dims[1],
            b.dims[2],
            if b.succeeded { "succeeded" } else { "failed" }
        );
    }
    out
}
