use std::io::Write;

use super::tree::GenealogyTree;
use crate::error::Result;

pub const RECORD_HEADER: &str = "id,parent,birth_time,birth_position,death_time,alive,pruned";
pub const CHECKPOINT_HEADER: &str = "id,time,position,kind";

/// Writes one row per particle record. Root parent is left empty.
pub fn write_records<W: Write>(tree: &GenealogyTree, out: &mut W) -> Result<()> {
    writeln!(out, "{RECORD_HEADER}")?;
    for r in tree.records() {
        let parent = r.parent.map(|p| p.0.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.id.0, parent, r.birth_time, r.birth_position, r.death_time, r.alive_at_horizon as u8, r.pruned as u8
        )?;
    }
    Ok(())
}

/// Writes every checkpoint; `kind` is `grid` or `death` (an off-grid
/// branch, prune or horizon position).
pub fn write_checkpoints<W: Write>(tree: &GenealogyTree, out: &mut W) -> Result<()> {
    writeln!(out, "{CHECKPOINT_HEADER}")?;
    for r in tree.records() {
        let grid = r.checkpoint_count();
        for (i, (s, x)) in tree.checkpoints(r.id).enumerate() {
            let kind = if i < grid { "grid" } else { "death" };
            writeln!(out, "{},{},{},{}", r.id.0, s, x, kind)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::fixtures::two_level_fixture;

    #[test]
    fn fixture_dump() {
        let tree = two_level_fixture();
        let mut buf = Vec::new();
        write_records(&tree, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[1], "0,,0,0,1,0,0");
        assert_eq!(lines[2], "1,0,1,0.5,2.5,0,0");

        let mut buf = Vec::new();
        write_checkpoints(&tree, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("1,2.5,1.2,death"));
        assert_eq!(text.lines().count(), 1 + 1 + 2 + 2 + 2 + 3);
    }
}
