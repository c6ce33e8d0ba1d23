use std::io::Write;
use std::path::Path;

use lightsync::digest::Hash32;
use lightsync::mmr::{mmr_verify_inclusion, MmrInclusionProof, MmrStore};
use serde_json::json;

use super::to_value;
use crate::args::{MmrAction, MmrArgs};
use crate::{config_err, CliError};

fn parse_hash(s: &str) -> Result<Hash32, CliError> {
    Hash32::from_hex(s.trim()).map_err(|e| config_err(format!("bad digest {s:?}: {e}")))
}

fn read_leaves(path: &Path) -> Result<Vec<Hash32>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(parse_hash)
        .collect()
}

fn summary(store: &MmrStore) -> Result<serde_json::Value, CliError> {
    let acc = store.accumulator();
    let root = acc.root().map_err(config_err)?;
    Ok(json!({
        "leaf_count": acc.leaf_count(),
        "root": root,
        "peaks": acc.peaks(),
    }))
}

pub fn run(a: &MmrArgs) -> Result<serde_json::Value, CliError> {
    match &a.action {
        MmrAction::Root { leaves } => {
            let store = MmrStore::from_leaves(&read_leaves(leaves)?);
            summary(&store)
        }
        MmrAction::Append { leaves, new } => {
            let new: Vec<Hash32> = new
                .iter()
                .map(|s| parse_hash(s))
                .collect::<Result<_, _>>()?;
            let mut all = if leaves.exists() {
                read_leaves(leaves)?
            } else {
                Vec::new()
            };
            let mut f = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(leaves)
                .map_err(|e| config_err(format!("cannot open {}: {e}", leaves.display())))?;
            for h in &new {
                writeln!(f, "{h}").map_err(|e| CliError::Internal(e.to_string()))?;
            }
            all.extend(new);
            summary(&MmrStore::from_leaves(&all))
        }
        MmrAction::Prove {
            leaves,
            index,
            count,
            out,
        } => {
            let all = read_leaves(leaves)?;
            let store = MmrStore::from_leaves(&all);
            let count = count.unwrap_or(all.len() as u64);
            let proof = store.prove(*index, count).map_err(config_err)?;
            let root = store.root_at(count).map_err(config_err)?;
            let doc = json!({
                "root": root,
                "leaf": all[*index as usize],
                "proof": to_value(&proof)?,
                "proof_bytes": hex::encode(proof.to_bytes()),
            });
            if let Some(path) = out {
                std::fs::write(path, serde_json::to_string_pretty(&doc).expect("json"))
                    .map_err(|e| config_err(format!("cannot write {}: {e}", path.display())))?;
            }
            Ok(doc)
        }
        MmrAction::Verify { root, leaf, proof } => {
            let root = parse_hash(root)?;
            let leaf = parse_hash(leaf)?;
            let text = std::fs::read_to_string(proof)
                .map_err(|e| config_err(format!("cannot read {}: {e}", proof.display())))?;
            let doc: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| config_err(format!("bad proof file: {e}")))?;
            let body = doc.get("proof").cloned().unwrap_or(doc);
            let p: MmrInclusionProof =
                serde_json::from_value(body).map_err(|e| config_err(format!("bad proof: {e}")))?;
            Ok(json!({ "valid": mmr_verify_inclusion(&root, &leaf, &p) }))
        }
    }
}
