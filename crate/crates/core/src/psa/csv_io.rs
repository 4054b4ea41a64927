//! CSV persistence for PSA and augmented PSA datasets.
//!
//! Column naming: `sim`, parameter columns (any other name), `qaly.t<k>`
//! (read alias `effect.t<k>`), `cost.t<k>`, and for augmented files
//! `nmb.t<k>` and `enb.t<k>` (read alias `evppi.t<k>`).

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use super::{AugmentedPsaDataset, BaseColumn, DecisionUncertaintyCurves, PsaDataset, Strategy};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

const MIN_SIGNIFICANT: usize = 10;

/// Renders a real with at least ten significant digits using the shortest
/// representation that parses back to the same `f64`.
pub fn format_decimal(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:e}", x.abs());
    let (mantissa, exp) = sci.split_once('e').expect("LowerExp always has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let mut digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    while digits.len() < MIN_SIGNIFICANT {
        digits.push('0');
    }
    let sign = if x < 0.0 { "-" } else { "" };
    if (-5..16).contains(&exp) {
        if exp >= 0 {
            let int_len = exp as usize + 1;
            while digits.len() < int_len + 1 {
                digits.push('0');
            }
            format!("{sign}{}.{}", &digits[..int_len], &digits[int_len..])
        } else {
            let zeros = "0".repeat((-exp - 1) as usize);
            format!("{sign}0.{zeros}{digits}")
        }
    } else {
        format!("{sign}{}.{}e{exp}", &digits[..1], &digits[1..])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Role {
    Sim,
    Parameter,
    Effect(usize),
    Cost(usize),
    Nmb(usize),
    Eta(usize),
}

fn strategy_suffix(name: &str, prefix: &str) -> Option<usize> {
    let rest = name.strip_prefix(prefix)?.strip_prefix(".t")?;
    let k: usize = rest.parse().ok()?;
    (k >= 1 && rest == k.to_string()).then_some(k)
}

fn classify(name: &str) -> Role {
    if name == "sim" {
        return Role::Sim;
    }
    for (prefix, make) in [
        ("qaly", Role::Effect as fn(usize) -> Role),
        ("effect", Role::Effect),
        ("cost", Role::Cost),
        ("nmb", Role::Nmb),
        ("enb", Role::Eta),
        ("evppi", Role::Eta),
    ] {
        if let Some(k) = strategy_suffix(name, prefix) {
            return make(k - 1);
        }
    }
    Role::Parameter
}

struct RawTable {
    header: Vec<String>,
    roles: Vec<Role>,
    rows: Vec<Vec<f64>>,
}

fn read_table<R: Read>(reader: R) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Format(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Format("missing header row".to_string()));
    }
    let mut seen = HashSet::new();
    for h in &header {
        if h.is_empty() {
            return Err(Error::Schema("empty column name in header".to_string()));
        }
        if !seen.insert(h.as_str()) {
            return Err(Error::Schema(format!("duplicate column name `{h}`")));
        }
    }
    let roles: Vec<Role> = header.iter().map(|h| classify(h)).collect();
    let mut role_seen = HashSet::new();
    for (h, r) in header.iter().zip(&roles) {
        if *r != Role::Parameter && !role_seen.insert(*r) {
            return Err(Error::Schema(format!(
                "column `{h}` duplicates another column for the same strategy"
            )));
        }
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        let mut row = Vec::with_capacity(header.len());
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row: i + 1,
                column: header[j].clone(),
                message: format!("`{field}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: i + 1,
                    column: header[j].clone(),
                    message: "value is not finite".to_string(),
                });
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.len() < 2 {
        return Err(Error::Schema(format!(
            "S ≥ 2 required, found {} data rows",
            rows.len()
        )));
    }
    Ok(RawTable {
        header,
        roles,
        rows,
    })
}

/// Collects per-strategy columns; indices must be contiguous 1..T.
fn strategy_columns(
    table: &RawTable,
    pick: impl Fn(Role) -> Option<usize>,
    label: &str,
) -> Result<BTreeMap<usize, usize>> {
    let mut map = BTreeMap::new();
    for (j, r) in table.roles.iter().enumerate() {
        if let Some(t) = pick(*r) {
            map.insert(t, j);
        }
    }
    if let Some((&last, _)) = map.iter().next_back() {
        if last + 1 != map.len() {
            return Err(Error::Schema(format!(
                "{label} columns must cover strategies 1..T without gaps"
            )));
        }
    }
    Ok(map)
}

fn column_matrix(table: &RawTable, cols: &[usize]) -> Matrix {
    let mut m = Matrix::zeros(table.rows.len(), cols.len());
    for (i, row) in table.rows.iter().enumerate() {
        for (k, &j) in cols.iter().enumerate() {
            m.set(i, k, row[j]);
        }
    }
    m
}

fn base_from_table(table: &RawTable) -> Result<PsaDataset> {
    let effects = strategy_columns(table, |r| if let Role::Effect(t) = r { Some(t) } else { None }, "effect")?;
    let costs = strategy_columns(table, |r| if let Role::Cost(t) = r { Some(t) } else { None }, "cost")?;
    if effects.len() != costs.len() {
        return Err(Error::Schema(format!(
            "every strategy needs one effect and one cost column ({} effect, {} cost)",
            effects.len(),
            costs.len()
        )));
    }
    if let Some(j) = table.roles.iter().position(|r| *r == Role::Sim) {
        for (i, row) in table.rows.iter().enumerate() {
            if row[j] != (i + 1) as f64 {
                return Err(Error::Parse {
                    row: i + 1,
                    column: "sim".to_string(),
                    message: format!("expected simulation index {}, found {}", i + 1, row[j]),
                });
            }
        }
    }
    let param_cols: Vec<usize> = (0..table.header.len())
        .filter(|&j| table.roles[j] == Role::Parameter)
        .collect();
    let parameter_names = param_cols.iter().map(|&j| table.header[j].clone()).collect();
    let mut layout = Vec::new();
    let mut p = 0;
    for r in &table.roles {
        match *r {
            Role::Sim => layout.push(BaseColumn::Sim),
            Role::Parameter => {
                layout.push(BaseColumn::Parameter(p));
                p += 1;
            }
            Role::Effect(t) => layout.push(BaseColumn::Effect(t)),
            Role::Cost(t) => layout.push(BaseColumn::Cost(t)),
            Role::Nmb(_) | Role::Eta(_) => {}
        }
    }
    PsaDataset::with_layout(
        parameter_names,
        Strategy::defaults(effects.len()),
        column_matrix(table, &param_cols),
        column_matrix(table, &effects.values().copied().collect::<Vec<_>>()),
        column_matrix(table, &costs.values().copied().collect::<Vec<_>>()),
        layout,
    )
}

/// Reads a PSA dataset. Augmented columns, if present, are ignored.
pub fn load_psa_dataset<R: Read>(reader: R) -> Result<PsaDataset> {
    base_from_table(&read_table(reader)?)
}

/// Reads an augmented PSA dataset; `phi_names` records which parameters
/// the η columns condition on.
pub fn load_augmented_psa_dataset<R: Read>(reader: R, phi_names: Vec<String>) -> Result<AugmentedPsaDataset> {
    let table = read_table(reader)?;
    let base = base_from_table(&table)?;
    let t = base.n_strategies();
    let nmb = strategy_columns(&table, |r| if let Role::Nmb(t) = r { Some(t) } else { None }, "nmb")?;
    let eta = strategy_columns(&table, |r| if let Role::Eta(t) = r { Some(t) } else { None }, "enb")?;
    if nmb.len() != t || eta.len() != t {
        return Err(Error::Schema(format!(
            "augmented dataset needs {t} nmb and {t} enb/evppi columns, found {} and {}",
            nmb.len(),
            eta.len()
        )));
    }
    AugmentedPsaDataset::new(
        base,
        column_matrix(&table, &nmb.values().copied().collect::<Vec<_>>()),
        column_matrix(&table, &eta.values().copied().collect::<Vec<_>>()),
        phi_names,
    )
}

fn base_header(ds: &PsaDataset) -> Vec<String> {
    ds.layout()
        .iter()
        .map(|c| match *c {
            BaseColumn::Sim => "sim".to_string(),
            BaseColumn::Parameter(p) => ds.parameter_names()[p].clone(),
            BaseColumn::Effect(t) => format!("qaly.t{}", t + 1),
            BaseColumn::Cost(t) => format!("cost.t{}", t + 1),
        })
        .collect()
}

fn base_fields(ds: &PsaDataset, r: usize, out: &mut Vec<String>) {
    for c in ds.layout() {
        out.push(match *c {
            BaseColumn::Sim => (r + 1).to_string(),
            BaseColumn::Parameter(p) => format_decimal(ds.parameters().get(r, p)),
            BaseColumn::Effect(t) => format_decimal(ds.effects().get(r, t)),
            BaseColumn::Cost(t) => format_decimal(ds.costs().get(r, t)),
        });
    }
}

fn write_line<W: Write>(w: &mut W, fields: &[String]) -> Result<()> {
    w.write_all(fields.join(",").as_bytes())?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn save_psa_dataset<W: Write>(ds: &PsaDataset, mut writer: W) -> Result<()> {
    write_line(&mut writer, &base_header(ds))?;
    let mut fields = Vec::new();
    for r in 0..ds.n_samples() {
        fields.clear();
        base_fields(ds, r, &mut fields);
        write_line(&mut writer, &fields)?;
    }
    Ok(())
}

/// Writes base columns, then `nmb.t1..T`, then `enb.t1..T`.
pub fn save_augmented_psa_dataset<W: Write>(aug: &AugmentedPsaDataset, mut writer: W) -> Result<()> {
    let t = aug.base.n_strategies();
    let mut header = base_header(&aug.base);
    header.extend((1..=t).map(|k| format!("nmb.t{k}")));
    header.extend((1..=t).map(|k| format!("enb.t{k}")));
    write_line(&mut writer, &header)?;
    let mut fields = Vec::new();
    for r in 0..aug.base.n_samples() {
        fields.clear();
        base_fields(&aug.base, r, &mut fields);
        fields.extend(aug.nmb.row(r).iter().map(|&v| format_decimal(v)));
        fields.extend(aug.eta.row(r).iter().map(|&v| format_decimal(v)));
        write_line(&mut writer, &fields)?;
    }
    Ok(())
}

/// Long format: `lambda,strategy,ceac,elc,ceaf` (strategy 1-based, ceaf 0/1).
pub fn write_curves_csv<W: Write>(curves: &DecisionUncertaintyCurves, mut writer: W) -> Result<()> {
    writer.write_all(b"lambda,strategy,ceac,elc,ceaf\n")?;
    for (i, &l) in curves.thresholds.iter().enumerate() {
        for t in 0..curves.ceac[i].len() {
            writeln!(
                writer,
                "{},{},{},{},{}",
                format_decimal(l),
                t + 1,
                format_decimal(curves.ceac[i][t]),
                format_decimal(curves.elc[i][t]),
                u8::from(curves.ceaf[i] == t)
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const PSA_HEAD: &str = "sim,p.dr.t1,hr.dr.t2,u.ndr,c.dr,qaly.t1,qaly.t2,cost.t1,cost.t2\n\
1,0.259,0.611,0.846,88155.000,8.596,8.815,37407.287,38421.603\n\
2,0.268,0.557,0.766,127608.000,7.893,8.146,37340.764,38763.773\n";

    #[test]
    fn decimal_rendering() {
        assert_eq!(format_decimal(0.259), "0.2590000000");
        assert_eq!(format_decimal(37407.287), "37407.28700");
        assert_eq!(format_decimal(-500.0), "-500.0000000");
        assert_eq!(format_decimal(1e-300), "1.000000000e-300");
        assert_eq!(format_decimal(0.0), "0.0");
        assert_eq!(format_decimal(1e15), "1000000000000000.0");
        for x in [0.1 + 0.2, 1.0 / 3.0, -2.5e-7, 6.02214076e23, 837379.2024] {
            assert_eq!(format_decimal(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn loads_table_s1_row() {
        let ds = load_psa_dataset(PSA_HEAD.as_bytes()).unwrap();
        assert_eq!(ds.n_samples(), 2);
        assert_eq!(ds.n_strategies(), 2);
        assert_eq!(ds.parameter_names(), &["p.dr.t1", "hr.dr.t2", "u.ndr", "c.dr"]);
        assert_eq!(ds.parameter_column("p.dr.t1").unwrap()[0], 0.259);
        assert_eq!(ds.effects().get(0, 0), 8.596);
        assert_eq!(ds.costs().get(0, 0), 37407.287);
    }

    #[test]
    fn header_layout_of_generated_dataset() {
        let ds = PsaDataset::new(
            vec!["p".into()],
            Strategy::defaults(2),
            Matrix::from_rows(&[vec![0.1], vec![0.2]]),
            Matrix::from_rows(&[vec![1.0, 2.0], vec![1.5, 2.5]]),
            Matrix::from_rows(&[vec![10.0, 20.0], vec![15.0, 25.0]]),
        )
        .unwrap();
        let mut buf = Vec::new();
        save_psa_dataset(&ds, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "sim,p,qaly.t1,cost.t1,qaly.t2,cost.t2");

        let aug = AugmentedPsaDataset::new(
            ds.clone(),
            Matrix::zeros(2, 2),
            Matrix::zeros(2, 2),
            vec!["p".into()],
        )
        .unwrap();
        let mut buf = Vec::new();
        save_augmented_psa_dataset(&aug, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "sim,p,qaly.t1,cost.t1,qaly.t2,cost.t2,nmb.t1,nmb.t2,enb.t1,enb.t2"
        );
    }

    #[test]
    fn evppi_alias_loads_into_eta() {
        let text = "sim,p,qaly.t1,qaly.t2,cost.t1,cost.t2,nmb.t1,nmb.t2,evppi.t1,evppi.t2\n\
1,0.1,1,2,10,20,5,6,17869394,17869395\n\
2,0.2,1,2,10,20,5,6,11904043,13520849\n";
        let aug = load_augmented_psa_dataset(text.as_bytes(), vec!["p".into()]).unwrap();
        assert_eq!(aug.eta.get(0, 0), 17869394.0);
        assert_eq!(aug.eta.get(1, 1), 13520849.0);
        assert_eq!(aug.nmb.get(1, 1), 6.0);
    }

    #[test]
    fn error_paths() {
        assert!(matches!(load_psa_dataset("".as_bytes()), Err(Error::Format(_))));
        let header_only = "sim,p,qaly.t1,cost.t1,qaly.t2,cost.t2\n";
        match load_psa_dataset(header_only.as_bytes()) {
            Err(Error::Schema(m)) => assert!(m.contains("S ≥ 2 required")),
            other => panic!("unexpected {other:?}"),
        }
        let bad = "p,qaly.t1,cost.t1,qaly.t2,cost.t2\n0.1,1,2,3,4\n0.2,x,2,3,4\n";
        match load_psa_dataset(bad.as_bytes()) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "qaly.t1");
            }
            other => panic!("unexpected {other:?}"),
        }
        let dup = "p,p,qaly.t1,cost.t1,qaly.t2,cost.t2\n1,1,1,2,3,4\n1,1,1,2,3,4\n";
        assert!(matches!(load_psa_dataset(dup.as_bytes()), Err(Error::Schema(_))));
        let alias_dup = "qaly.t1,effect.t1,cost.t1,qaly.t2,cost.t2\n1,1,1,2,3\n1,1,1,2,3\n";
        assert!(matches!(load_psa_dataset(alias_dup.as_bytes()), Err(Error::Schema(_))));
        let missing_cost = "qaly.t1,cost.t1,qaly.t2\n1,1,1\n1,1,1\n";
        assert!(matches!(load_psa_dataset(missing_cost.as_bytes()), Err(Error::Schema(_))));
        let bad_sim = "sim,qaly.t1,cost.t1,qaly.t2,cost.t2\n1,1,1,1,1\n3,1,1,1,1\n";
        assert!(matches!(load_psa_dataset(bad_sim.as_bytes()), Err(Error::Parse { .. })));
    }

    #[test]
    fn round_trip_preserves_file_order() {
        let ds = load_psa_dataset(PSA_HEAD.as_bytes()).unwrap();
        let mut buf = Vec::new();
        save_psa_dataset(&ds, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), PSA_HEAD.lines().next().unwrap());
        let again = load_psa_dataset(text.as_bytes()).unwrap();
        assert_eq!(again, ds);
    }
}
