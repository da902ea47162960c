//! Mixed numeric/categorical inputs via one-hot hypernodes.
//!
//! Each feature owns a group of input units (1 for numeric, one per category
//! for categorical) and a group of embedding units. Block masks tie the
//! groups together: encoder/decoder paths inside a feature's block are free,
//! paths crossing feature groups are penalized, and the recovered unit-level
//! graph is collapsed back to one score per feature pair.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::mlp::Scaling;
use crate::pathnorm::{block_diag_mask, GraphMask, MaskKind, RecoveredGraph};

/// Default cap on the embedding width of a categorical hypernode.
pub const MAX_DEFAULT_EMBED_WIDTH: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum ColumnKind {
    Numeric,
    Categorical { categories: Vec<String> },
}

/// One declared input feature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(flatten)]
    pub kind: ColumnKind,
    /// Hypernode embedding width; defaults to 1 for numeric columns and
    /// min(|categories|, 4) for categorical ones.
    pub embed_width: usize,
}

impl Column {
    pub fn numeric(name: impl Into<String>) -> Self {
        Column {
            name: name.into(),
            kind: ColumnKind::Numeric,
            embed_width: 1,
        }
    }

    pub fn categorical(name: impl Into<String>, categories: Vec<String>) -> Self {
        let embed_width = categories.len().min(MAX_DEFAULT_EMBED_WIDTH);
        Column {
            name: name.into(),
            kind: ColumnKind::Categorical { categories },
            embed_width,
        }
    }

    /// Width of this feature's input block (1, or one unit per category).
    pub fn input_width(&self) -> usize {
        match &self.kind {
            ColumnKind::Numeric => 1,
            ColumnKind::Categorical { categories } => categories.len(),
        }
    }
}

/// Ordered column declarations for a mixed table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub columns: Vec<Column>,
}

impl FeatureSchema {
    pub fn validate(&self) -> Result<()> {
        if self.columns.len() < 2 {
            return Err(Error::invalid("schema needs at least two columns"));
        }
        for col in &self.columns {
            if col.embed_width == 0 {
                return Err(Error::invalid(format!(
                    "column '{}': embed width must be >= 1",
                    col.name
                )));
            }
            if let ColumnKind::Categorical { categories } = &col.kind {
                if categories.len() < 2 {
                    return Err(Error::invalid(format!(
                        "column '{}': a categorical column needs at least two categories",
                        col.name
                    )));
                }
                let mut sorted = categories.clone();
                sorted.sort();
                sorted.dedup();
                if sorted.len() != categories.len() {
                    return Err(Error::invalid(format!(
                        "column '{}': duplicate categories",
                        col.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn num_features(&self) -> usize {
        self.columns.len()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn input_widths(&self) -> Vec<usize> {
        self.columns.iter().map(Column::input_width).collect()
    }

    pub fn embed_widths(&self) -> Vec<usize> {
        self.columns.iter().map(|c| c.embed_width).collect()
    }

    pub fn total_input_width(&self) -> usize {
        self.input_widths().iter().sum()
    }

    pub fn total_embed_width(&self) -> usize {
        self.embed_widths().iter().sum()
    }

    pub fn is_all_numeric(&self) -> bool {
        self.columns
            .iter()
            .all(|c| matches!(c.kind, ColumnKind::Numeric))
    }

    /// Names of the encoded input units ("col" for numeric, "col=cat" per
    /// category).
    pub fn unit_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.total_input_width());
        for col in &self.columns {
            match &col.kind {
                ColumnKind::Numeric => names.push(col.name.clone()),
                ColumnKind::Categorical { categories } => {
                    for cat in categories {
                        names.push(format!("{}={cat}", col.name));
                    }
                }
            }
        }
        names
    }
}

/// Infer a schema from raw string cells: a column whose every cell parses as
/// a float is numeric, anything else is categorical with sorted unique
/// categories.
pub fn build_schema(rows: &[Vec<String>], names: &[String]) -> Result<FeatureSchema> {
    if rows.is_empty() {
        return Err(Error::invalid("empty table"));
    }
    let d = names.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::invalid("ragged rows"));
    }
    let mut columns = Vec::with_capacity(d);
    for (c, name) in names.iter().enumerate() {
        let cells: Vec<&str> = rows.iter().map(|r| r[c].trim()).collect();
        if cells.iter().any(|s| s.is_empty()) {
            return Err(Error::invalid(format!("column '{name}' has empty cells")));
        }
        let numeric = cells.iter().all(|s| s.parse::<f64>().is_ok());
        if numeric {
            columns.push(Column::numeric(name.clone()));
        } else {
            let mut categories: Vec<String> = cells.iter().map(|s| s.to_string()).collect();
            categories.sort();
            categories.dedup();
            if categories.len() < 2 {
                return Err(Error::invalid(format!(
                    "column '{name}' has a single category"
                )));
            }
            columns.push(Column::categorical(name.clone(), categories));
        }
    }
    let schema = FeatureSchema { columns };
    schema.validate()?;
    Ok(schema)
}

/// Encode raw rows under a schema: numeric columns z-scored, categorical
/// columns one-hot (not standardized).
pub fn encode(rows: &[Vec<String>], schema: &FeatureSchema) -> Result<Dataset> {
    schema.validate()?;
    if rows.len() < 2 {
        return Err(Error::data("need at least 2 rows to encode"));
    }
    if rows.iter().any(|r| r.len() != schema.num_features()) {
        return Err(Error::data(format!(
            "rows must have {} cells",
            schema.num_features()
        )));
    }
    let n = rows.len();
    let width = schema.total_input_width();
    let mut values = Array2::zeros((n, width));
    let mut scaling = Vec::with_capacity(width);
    let mut offset = 0;
    for (c, col) in schema.columns.iter().enumerate() {
        match &col.kind {
            ColumnKind::Numeric => {
                let mut raw = Vec::with_capacity(n);
                for (r, row) in rows.iter().enumerate() {
                    let v: f64 = row[c].trim().parse().map_err(|_| {
                        Error::data(format!(
                            "row {}: cannot parse '{}' in numeric column '{}'",
                            r + 1,
                            row[c],
                            col.name
                        ))
                    })?;
                    raw.push(v);
                }
                let mean = raw.iter().sum::<f64>() / n as f64;
                let var = raw.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
                let mut std = var.sqrt();
                if std == 0.0 {
                    log::warn!("column '{}' is constant; clamping std to 1", col.name);
                    std = 1.0;
                }
                for (r, v) in raw.iter().enumerate() {
                    values[[r, offset]] = (v - mean) / std;
                }
                scaling.push(Scaling { mean, std });
                offset += 1;
            }
            ColumnKind::Categorical { categories } => {
                for (r, row) in rows.iter().enumerate() {
                    let cell = row[c].trim();
                    let at = categories.iter().position(|cat| cat == cell).ok_or_else(|| {
                        Error::data(format!(
                            "row {}: unseen category '{cell}' in column '{}'",
                            r + 1,
                            col.name
                        ))
                    })?;
                    values[[r, offset + at]] = 1.0;
                }
                for _ in 0..categories.len() {
                    scaling.push(Scaling { mean: 0.0, std: 1.0 });
                }
                offset += categories.len();
            }
        }
    }
    Dataset::with_scaling(values, schema.unit_names(), scaling)
}

/// Invert `encode`: numeric units are de-standardized, categorical blocks
/// decoded by argmax.
pub fn decode(dataset: &Dataset, schema: &FeatureSchema) -> Result<Vec<Vec<String>>> {
    if dataset.num_features() != schema.total_input_width() {
        return Err(Error::shape(format!(
            "dataset width {} vs schema input width {}",
            dataset.num_features(),
            schema.total_input_width()
        )));
    }
    let scaling = dataset
        .scaling()
        .ok_or_else(|| Error::invalid("dataset has no scaling record"))?;
    let mut out = Vec::with_capacity(dataset.num_samples());
    for r in 0..dataset.num_samples() {
        let row = dataset.values().row(r);
        let mut cells = Vec::with_capacity(schema.num_features());
        let mut offset = 0;
        for col in &schema.columns {
            match &col.kind {
                ColumnKind::Numeric => {
                    let s = scaling[offset];
                    cells.push(format!("{}", row[offset] * s.std + s.mean));
                    offset += 1;
                }
                ColumnKind::Categorical { categories } => {
                    let block = row.slice(ndarray::s![offset..offset + categories.len()]);
                    let mut best = 0;
                    for (k, v) in block.iter().enumerate() {
                        if *v > block[best] {
                            best = k;
                        }
                    }
                    cells.push(categories[best].clone());
                    offset += categories.len();
                }
            }
        }
        out.push(cells);
    }
    Ok(out)
}

/// Block masks tying input, embedding and output unit groups per feature.
#[derive(Debug, Clone)]
pub struct MultimodalMasks {
    /// (ΣI × ΣE) input-to-embedding ownership.
    pub s_enc: GraphMask,
    /// (ΣE × ΣI) embedding-to-output ownership.
    pub s_dec: GraphMask,
    /// (ΣE × ΣE) hypernode self-dependency selector for the core.
    pub s_diag_block: GraphMask,
}

/// Build the three block masks of a schema.
pub fn hypernode_masks(schema: &FeatureSchema) -> Result<MultimodalMasks> {
    schema.validate()?;
    let input = schema.input_widths();
    let embed = schema.embed_widths();
    let s_enc = block_diag_mask(&input, &embed)?.with_kind(MaskKind::Encoder);
    let s_dec = block_diag_mask(&embed, &input)?.with_kind(MaskKind::Decoder);
    let s_diag_block = block_diag_mask(&embed, &embed)?;
    Ok(MultimodalMasks {
        s_enc,
        s_dec,
        s_diag_block,
    })
}

/// Collapse unit-level core scores (ΣE × ΣE) to one score per feature pair:
/// maximum over each cross block, then symmetrize, zero the diagonal and
/// max-normalize.
pub fn collapse_to_feature_graph(
    unit_scores: &ArrayView2<f64>,
    schema: &FeatureSchema,
) -> Result<RecoveredGraph> {
    let widths = schema.embed_widths();
    let total: usize = widths.iter().sum();
    if unit_scores.dim() != (total, total) {
        return Err(Error::shape(format!(
            "unit scores {:?} vs hypernode width {total}",
            unit_scores.dim()
        )));
    }
    let d = schema.num_features();
    let mut offsets = Vec::with_capacity(d + 1);
    let mut acc = 0;
    offsets.push(0);
    for w in &widths {
        acc += w;
        offsets.push(acc);
    }
    let mut collapsed = Array2::zeros((d, d));
    for a in 0..d {
        for b in 0..d {
            let mut best = 0.0f64;
            for i in offsets[a]..offsets[a + 1] {
                for j in offsets[b]..offsets[b + 1] {
                    best = best.max(unit_scores[[i, j]]);
                }
            }
            collapsed[[a, b]] = best;
        }
    }
    let sym = (&collapsed + &collapsed.t()) / 2.0;
    RecoveredGraph::from_scores(sym, schema.feature_names())
}

/// Schema JSON document written alongside a trained multimodal model.
#[derive(Debug, Serialize, Deserialize)]
pub struct SchemaFile {
    pub format_version: u32,
    pub columns: Vec<Column>,
}

pub const SCHEMA_FORMAT_VERSION: u32 = 1;

impl SchemaFile {
    pub fn new(schema: &FeatureSchema) -> Self {
        SchemaFile {
            format_version: SCHEMA_FORMAT_VERSION,
            columns: schema.columns.clone(),
        }
    }

    pub fn into_schema(self) -> Result<FeatureSchema> {
        let schema = FeatureSchema {
            columns: self.columns,
        };
        schema.validate()?;
        Ok(schema)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn rows(table: &[&[&str]]) -> Vec<Vec<String>> {
        table
            .iter()
            .map(|r| r.iter().map(|s| s.to_string()).collect())
            .collect()
    }

    #[test]
    fn schema_widths() {
        let table = rows(&[&["31", "F"], &["45", "M"], &["27", "F"]]);
        let schema = build_schema(&table, &["age".into(), "sex".into()]).unwrap();
        assert_eq!(schema.input_widths(), vec![1, 2]);
        assert!(matches!(schema.columns[0].kind, ColumnKind::Numeric));
    }

    #[test]
    fn all_numeric_schema_is_identity_encoding() {
        let table = rows(&[&["1.0", "2.0"], &["3.0", "4.0"], &["5.0", "6.0"]]);
        let names = ["a".to_string(), "b".to_string()];
        let schema = build_schema(&table, &names).unwrap();
        assert!(schema.is_all_numeric());
        let encoded = encode(&table, &schema).unwrap();
        assert_eq!(encoded.num_features(), 2);
        // Equal to the plain standardized numeric dataset.
        let raw = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let plain = crate::data::Dataset::from_matrix(raw, names.to_vec())
            .unwrap()
            .standardized()
            .unwrap();
        assert_eq!(encoded.values(), plain.values());
    }

    #[test]
    fn categories_sorted_deterministically() {
        let table = rows(&[&["z"], &["a"], &["m"], &["a"]]);
        // single column tables are rejected, so add a numeric buddy
        let table: Vec<Vec<String>> = table
            .into_iter()
            .enumerate()
            .map(|(i, mut r)| {
                r.push(format!("{i}"));
                r
            })
            .collect();
        let schema = build_schema(&table, &["c".into(), "n".into()]).unwrap();
        match &schema.columns[0].kind {
            ColumnKind::Categorical { categories } => {
                assert_eq!(categories, &["a", "m", "z"]);
            }
            other => panic!("expected categorical, got {other:?}"),
        }
    }

    #[test]
    fn single_category_rejected() {
        let table = rows(&[&["only", "1"], &["only", "2"]]);
        assert!(build_schema(&table, &["c".into(), "n".into()]).is_err());
    }

    #[test]
    fn empty_cell_rejected() {
        let table = rows(&[&["", "1"], &["x", "2"]]);
        assert!(build_schema(&table, &["c".into(), "n".into()]).is_err());
    }

    #[test]
    fn one_hot_encoding() {
        let table = rows(&[&["1.0", "F"], &["2.0", "M"], &["3.0", "F"]]);
        let schema = build_schema(&table, &["x".into(), "sex".into()]).unwrap();
        let ds = encode(&table, &schema).unwrap();
        assert_eq!(ds.num_features(), 3);
        assert_eq!(ds.values().row(0)[1], 1.0); // sex=F
        assert_eq!(ds.values().row(0)[2], 0.0);
        assert_eq!(ds.values().row(1)[1], 0.0);
        assert_eq!(ds.values().row(1)[2], 1.0); // sex=M
        assert_eq!(ds.feature_names()[1], "sex=F");
    }

    #[test]
    fn encoded_width_counts() {
        let table = rows(&[
            &["1.0", "a", "x"],
            &["2.0", "b", "y"],
            &["3.0", "c", "x"],
        ]);
        let schema =
            build_schema(&table, &["n".into(), "c3".into(), "c2".into()]).unwrap();
        assert_eq!(schema.total_input_width(), 1 + 3 + 2);
        let ds = encode(&table, &schema).unwrap();
        assert_eq!(ds.num_features(), 6);
    }

    #[test]
    fn decode_roundtrips_categoricals() {
        let table = rows(&[&["1.5", "F"], &["2.5", "M"], &["3.5", "F"]]);
        let schema = build_schema(&table, &["x".into(), "sex".into()]).unwrap();
        let ds = encode(&table, &schema).unwrap();
        let decoded = decode(&ds, &schema).unwrap();
        for (orig, back) in table.iter().zip(decoded.iter()) {
            assert_eq!(orig[1], back[1]);
        }
    }

    #[test]
    fn unseen_category_names_row_and_column() {
        let table = rows(&[&["1.0", "F"], &["2.0", "M"]]);
        let schema = build_schema(&table, &["x".into(), "sex".into()]).unwrap();
        let bad = rows(&[&["1.0", "F"], &["2.0", "Q"]]);
        let err = encode(&bad, &schema).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2") && msg.contains("sex") && msg.contains('Q'), "{msg}");
    }

    #[test]
    fn hypernode_mask_block_pattern() {
        // schema [1-wide, 2-wide], embeds forced to [1, 1]
        let mut schema = FeatureSchema {
            columns: vec![
                Column::numeric("a"),
                Column::categorical("b", vec!["x".into(), "y".into()]),
            ],
        };
        schema.columns[1].embed_width = 1;
        let masks = hypernode_masks(&schema).unwrap();
        assert_eq!(
            masks.s_enc.matrix(),
            &array![[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]
        );
        assert_eq!(masks.s_dec.matrix().dim(), (2, 3));
        assert_eq!(masks.s_diag_block.matrix(), &Array2::<f64>::eye(2));
    }

    #[test]
    fn mask_row_sums_equal_owning_group_width() {
        let schema = FeatureSchema {
            columns: vec![
                Column::numeric("a"),
                Column::categorical("b", vec!["x".into(), "y".into(), "z".into()]),
            ],
        };
        let masks = hypernode_masks(&schema).unwrap();
        let embed = schema.embed_widths();
        let mut row = 0;
        for (f, &w) in schema.input_widths().iter().enumerate() {
            for r in row..row + w {
                assert_eq!(masks.s_enc.matrix().row(r).sum() as usize, embed[f]);
            }
            row += w;
        }
        let overlap: f64 =
            (masks.s_enc.matrix() * masks.s_enc.complement().matrix()).sum();
        assert_eq!(overlap, 0.0);
    }

    #[test]
    fn collapse_zero_scores_is_empty() {
        let schema = FeatureSchema {
            columns: vec![Column::numeric("a"), Column::numeric("b")],
        };
        let unit = Array2::zeros((2, 2));
        let g = collapse_to_feature_graph(&unit.view(), &schema).unwrap();
        assert!(g.edges.is_empty());
    }

    #[test]
    fn collapse_single_unit_pair() {
        let schema = FeatureSchema {
            columns: vec![
                Column::numeric("a"),
                Column::categorical("b", vec!["x".into(), "y".into()]),
            ],
        };
        // embeds: a→1 unit, b→2 units; one nonzero in the (a, b) cross block.
        let mut unit = Array2::zeros((3, 3));
        unit[[0, 2]] = 0.7;
        unit[[2, 0]] = 0.7;
        let g = collapse_to_feature_graph(&unit.view(), &schema).unwrap();
        assert_eq!(g.edges.len(), 1);
        assert_eq!((g.edges[0].0, g.edges[0].1), (0, 1));
        assert_eq!(g.edges[0].2, 1.0);
    }

    #[test]
    fn max_equals_mean_when_blocks_have_one_nonzero() {
        // With at most one nonzero per block, max and mean aggregation give
        // the same normalized graph (mean divides every block by the same
        // count only if widths match, so use 1-wide blocks).
        let schema = FeatureSchema {
            columns: vec![Column::numeric("a"), Column::numeric("b"), Column::numeric("c")],
        };
        let mut unit = Array2::zeros((3, 3));
        unit[[0, 1]] = 0.5;
        unit[[1, 0]] = 0.5;
        unit[[1, 2]] = 0.25;
        unit[[2, 1]] = 0.25;
        let g = collapse_to_feature_graph(&unit.view(), &schema).unwrap();
        assert_eq!(g.edges.len(), 2);
        assert_eq!(g.edges[0].2, 1.0);
        assert_eq!(g.edges[1].2, 0.5);
    }

    #[test]
    fn schema_file_roundtrip() {
        let schema = FeatureSchema {
            columns: vec![
                Column::numeric("a"),
                Column::categorical("b", vec!["x".into(), "y".into()]),
            ],
        };
        let json = serde_json::to_string(&SchemaFile::new(&schema)).unwrap();
        let back: SchemaFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.into_schema().unwrap(), schema);
    }
}
