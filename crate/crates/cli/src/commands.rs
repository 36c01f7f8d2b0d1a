use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use acev::components::{build_knn_graph, count_components, laplacian, split_components};
use acev::{evalkit, AcevConfig, PointMatrix};

use crate::dataset::{load_dataset, ColumnRef, Dataset};
use crate::error::{CliError, Result};
use crate::output::write_atomic;
use crate::report::{score, InputInfo, RunReport};
use crate::{ComponentsArgs, EvalArgs, GenArgs, SegmentArgs, SweepArgs};

const LABELS_HEADER: &str = "index,component,manifold";

fn input_info(path: &Path, ds: &Dataset) -> InputInfo {
    InputInfo {
        path: path.display().to_string(),
        sha256: ds.digest.clone(),
        n: ds.points.n(),
        dim: ds.points.dim(),
    }
}

/// `index,component,manifold` rows, one per point.
pub fn labels_csv(assignment: &[(usize, usize)]) -> String {
    let mut out = String::with_capacity(assignment.len() * 12);
    out.push_str(LABELS_HEADER);
    out.push('\n');
    for (i, (c, m)) in assignment.iter().enumerate() {
        let _ = writeln!(out, "{i},{c},{m}");
    }
    out
}

pub fn segment(args: &SegmentArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let ds = load_dataset(&args.input.dataset_file())?;
    let seg = acev::run(&ds.points, &cfg)?;

    let metrics = match &ds.labels {
        Some(truth) => Some(score(
            &seg.labeling.flat_labels(),
            truth,
            ds.mask.as_deref(),
        )?),
        None => None,
    };
    let report = RunReport::new(input_info(&args.input.input, &ds), &cfg, &seg, metrics);

    write_atomic(
        &args.out_labels,
        labels_csv(&seg.labeling.assignment).as_bytes(),
    )?;
    if let Some(path) = &args.out_report {
        write_atomic(path, report.to_json()?.as_bytes())?;
    }
    Ok(())
}

pub fn components(args: &ComponentsArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let ds = load_dataset(&args.input.dataset_file())?;
    let labels = component_labels(&ds.points, &cfg)?;
    println!("{}", labels.m);
    if let Some(path) = &args.out_labels {
        let mut out = String::from("index,component\n");
        for (i, c) in labels.labels.iter().enumerate() {
            let _ = writeln!(out, "{i},{c}");
        }
        write_atomic(path, out.as_bytes())?;
    }
    Ok(())
}

fn component_labels(points: &PointMatrix, cfg: &AcevConfig) -> Result<acev::ComponentLabels> {
    if points.n() == 1 {
        return Ok(acev::ComponentLabels {
            labels: vec![0],
            m: 1,
        });
    }
    let graph = build_knn_graph(points, cfg.k, cfg.symmetrization)?;
    let m = count_components(&laplacian(&graph), cfg.zero_tol)?.min(points.n());
    Ok(split_components(points, &graph, m, cfg.split)?)
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let a = read_labels(&args.labels_a, args.col_a.as_deref(), args.has_header)?;
    let b = read_labels(&args.labels_b, args.col_b.as_deref(), args.has_header)?;
    if a.len() != b.len() {
        return Err(CliError::Usage(format!(
            "label files differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let ari = evalkit::ari(&a, &b)?;
    let nmi = evalkit::nmi(&a, &b)?;
    println!("{}", serde_json::json!({ "ari": ari, "nmi": nmi }));
    Ok(())
}

/// Reads one label per row as dense ids in order of first appearance.
///
/// A `segment` labels CSV is keyed by its (component, manifold) pair unless a
/// column is named explicitly; other files default to their last column.
pub fn read_labels(path: &Path, column: Option<&str>, has_header: bool) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let first = text.lines().next().unwrap_or("").trim();
    let segment_file = first == LABELS_HEADER;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header || segment_file)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Option<Vec<String>> = if has_header || segment_file {
        let h = reader.headers().map_err(|e| CliError::Dataset {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Some(h.iter().map(str::to_string).collect())
    } else {
        None
    };

    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::Dataset {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let key = match column {
            None if segment_file => format!("{}/{}", &rec[1], &rec[2]),
            None => rec.iter().next_back().unwrap_or("").to_string(),
            Some(col) => {
                let idx = match ColumnRef::parse(col) {
                    ColumnRef::Name(name) => header
                        .as_ref()
                        .and_then(|h| h.iter().position(|c| *c == name)),
                    ColumnRef::Index(i) => Some(i),
                };
                let cell = idx
                    .and_then(|i| rec.get(i))
                    .ok_or_else(|| CliError::Dataset {
                        path: path.to_path_buf(),
                        message: format!("column {col:?} not found"),
                    })?;
                cell.to_string()
            }
        };
        let next = ids.len();
        out.push(*ids.entry(key).or_insert(next));
    }
    if out.is_empty() {
        return Err(CliError::Dataset {
            path: path.to_path_buf(),
            message: "no labels".into(),
        });
    }
    Ok(out)
}

/// Scene CSV: coordinate columns `x0..`, then `truth` and `mask` (0/1).
pub fn scene_csv(scene: &evalkit::SyntheticScene) -> String {
    let dim = scene.points.dim();
    let mut out = String::new();
    for d in 0..dim {
        let _ = write!(out, "x{d},");
    }
    out.push_str("truth,mask\n");
    for (i, row) in scene.points.rows().enumerate() {
        for x in row {
            let _ = write!(out, "{x},");
        }
        let _ = writeln!(
            out,
            "{},{}",
            scene.truth[i],
            u8::from(scene.intersection_mask[i])
        );
    }
    out
}

pub fn gen(args: &GenArgs) -> Result<()> {
    let scene = evalkit::preset(&args.scene, args.n, args.sigma, args.seed)?;
    write_atomic(&args.out, scene_csv(&scene).as_bytes())
}

pub const SWEEP_HEADER: &str =
    "k,alpha,warmup_frac,angle_tol,components,manifolds,ari,nmi,ari_off_mask,nmi_off_mask,runtime_s";

pub fn sweep(args: &SweepArgs) -> Result<()> {
    let base = args.config.resolve()?;
    if args.sweep_k.is_empty()
        && args.sweep_alpha.is_empty()
        && args.sweep_warmup_frac.is_empty()
        && args.sweep_angle_tol.is_empty()
    {
        return Err(CliError::Usage(
            "empty grid: give at least one of --sweep-k, --sweep-alpha, --sweep-warmup-frac, --sweep-angle-tol".into(),
        ));
    }
    let ds = load_dataset(&args.input.dataset_file())?;
    let truth = ds
        .labels
        .as_ref()
        .ok_or_else(|| CliError::Usage("sweep needs a --label-col to score against".into()))?;

    let axis = |v: &Vec<f64>, d: f64| if v.is_empty() { vec![d] } else { v.clone() };
    let ks = if args.sweep_k.is_empty() {
        vec![base.k]
    } else {
        args.sweep_k.clone()
    };
    let alphas = axis(&args.sweep_alpha, base.alpha);
    let warmups = axis(&args.sweep_warmup_frac, base.warmup_frac);
    let tols = axis(&args.sweep_angle_tol, base.angle_tol);

    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    for &k in &ks {
        for &alpha in &alphas {
            for &warmup_frac in &warmups {
                for &angle_tol in &tols {
                    let cfg = AcevConfig {
                        k,
                        alpha,
                        warmup_frac,
                        angle_tol,
                        ..base.clone()
                    };
                    let t = Instant::now();
                    let seg = acev::run(&ds.points, &cfg)?;
                    let runtime = t.elapsed().as_secs_f64();
                    let m = score(&seg.labeling.flat_labels(), truth, ds.mask.as_deref())?;
                    let _ = writeln!(
                        out,
                        "{k},{alpha},{warmup_frac},{angle_tol},{},{},{},{},{},{},{runtime}",
                        seg.components.m,
                        seg.labeling.manifold_count(),
                        m.ari,
                        m.nmi,
                        opt(m.ari_off_mask),
                        opt(m.nmi_off_mask),
                    );
                }
            }
        }
    }
    write_atomic(&args.out, out.as_bytes())
}
