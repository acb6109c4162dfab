use std::fs;
use std::path::{Path, PathBuf};

use hmkl::dataio::{
    load_feature_table, stratified_split, write_labels, write_split_manifest, write_view_csv, FeatureTable,
};
use hmkl::features::{
    bag_of_dense_lbp, build_codebook, dense_lbp_descriptors, lbp_of_dense_moments, load_rgb_image, read_codebook,
    write_codebook, LbpConfig,
};
use hmkl::harness::{
    accuracy, curve_rows, predict_multiclass, run_benchmark, table_csv, weight_rows, BenchmarkPlan, BenchmarkReport,
    Fit, Method, MulticlassModel, Workspace,
};
use ndarray::{Array2, Axis};
use rayon::prelude::*;

use crate::config::{check_p, Descriptor, RunConfig};
use crate::error::CliError;
use crate::output::{provenance, write_json, write_text, FileStore};

/// Flags shared by the subcommands.
#[derive(Clone, Debug, Default)]
pub struct Options {
    pub seed: Option<u64>,
    pub emit_plots: bool,
    pub no_heuristic: bool,
    pub p: Option<f64>,
    pub fraction: Option<f64>,
    pub out: Option<PathBuf>,
    pub model: Option<PathBuf>,
}

pub struct Context {
    pub config: RunConfig,
    pub opts: Options,
}

impl Context {
    pub fn new(config: RunConfig, opts: Options) -> Result<Self, CliError> {
        if let Some(p) = opts.p {
            check_p(p)?;
        }
        if let Some(f) = opts.fraction {
            if !(f > 0.0 && f < 1.0) {
                return Err(CliError::Validation(format!("--fraction {f} is outside (0, 1)")));
            }
        }
        Ok(Self { config, opts })
    }

    fn out_dir(&self) -> PathBuf {
        self.opts.out.clone().unwrap_or_else(|| self.config.output.clone())
    }

    fn seed(&self) -> u64 {
        self.opts.seed.unwrap_or(self.config.seed)
    }

    fn provenance(&self, seed: u64) -> String {
        provenance(&self.config.hash, seed)
    }

    fn load_table(&self) -> Result<FeatureTable<f64>, CliError> {
        let (labels, views) = self.config.require_table()?;
        load_feature_table(views, labels).map_err(CliError::input)
    }

    fn codebook_path(&self) -> PathBuf {
        self.config
            .codebook
            .clone()
            .unwrap_or_else(|| self.out_dir().join("codebook.txt"))
    }
}

/// Images of a `<class>/<image>` tree in sorted order, as (id, class, path).
fn image_tree(root: &Path) -> Result<Vec<(String, String, PathBuf)>, CliError> {
    let listing = |dir: &Path| -> Result<Vec<PathBuf>, CliError> {
        let mut entries: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| CliError::Validation(format!("{}: {e}", dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| !p.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.')))
            .collect();
        entries.sort();
        Ok(entries)
    };
    let mut out = Vec::new();
    for class_dir in listing(root)?.into_iter().filter(|p| p.is_dir()) {
        let class = class_dir.file_name().unwrap_or_default().to_string_lossy().into_owned();
        for file in listing(&class_dir)?.into_iter().filter(|p| p.is_file()) {
            let name = file.file_name().unwrap_or_default().to_string_lossy().into_owned();
            out.push((format!("{class}/{name}"), class.clone(), file));
        }
    }
    if out.is_empty() {
        return Err(CliError::Validation(format!(
            "image folder {} holds no <class>/<image> files",
            root.display()
        )));
    }
    Ok(out)
}

fn stack(rows: Vec<Vec<f64>>) -> Array2<f64> {
    let d = rows.first().map_or(0, |r| r.len());
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((flat.len() / d.max(1), d), flat).expect("rows share a length")
}

pub fn extract(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let images = image_tree(cfg.require_images()?)?;
    let codebook = if cfg.descriptors.contains(&Descriptor::Bag) {
        let path = ctx.codebook_path();
        if !path.is_file() {
            return Err(CliError::Validation(format!(
                "codebook {} does not exist; run `hmkl codebook` first",
                path.display()
            )));
        }
        Some(read_codebook::<f64>(&path).map_err(CliError::input)?)
    } else {
        None
    };
    let lbp = LbpConfig::default();
    let rows: Vec<Vec<Vec<f64>>> = images
        .par_iter()
        .map(|(_, _, path)| {
            let img = load_rgb_image::<f64>(path).map_err(CliError::input)?;
            cfg.descriptors
                .iter()
                .map(|d| match d {
                    Descriptor::Moments => lbp_of_dense_moments(&img, cfg.patch, &lbp),
                    Descriptor::Bag => bag_of_dense_lbp(
                        &img,
                        codebook.as_ref().expect("codebook loaded"),
                        cfg.patch,
                        cfg.step,
                        &lbp,
                    ),
                })
                .collect::<hmkl::Result<Vec<_>>>()
                .map_err(CliError::from)
        })
        .collect::<Result<_, _>>()?;

    let out = ctx.out_dir();
    fs::create_dir_all(&out)?;
    let prov = vec![ctx.provenance(ctx.seed())];
    let ids: Vec<String> = images.iter().map(|(id, _, _)| id.clone()).collect();
    let classes: Vec<String> = images.iter().map(|(_, c, _)| c.clone()).collect();
    write_labels(out.join("labels.csv"), &ids, &classes, &prov)?;
    for (k, d) in cfg.descriptors.iter().enumerate() {
        let view = stack(rows.iter().map(|r| r[k].clone()).collect());
        let path = out.join(format!("{}.csv", d.name()));
        write_view_csv(&path, &ids, &view, &prov)?;
        log::info!("wrote {} ({}x{})", path.display(), view.nrows(), view.ncols());
    }
    println!("extracted {} images into {}", ids.len(), out.display());
    Ok(())
}

pub fn codebook(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let images = image_tree(cfg.require_images()?)?;
    let lbp = LbpConfig::default();
    let blocks: Vec<Array2<f64>> = images
        .par_iter()
        .map(|(_, _, path)| {
            let img = load_rgb_image::<f64>(path).map_err(CliError::input)?;
            Ok(dense_lbp_descriptors(&img, cfg.patch, cfg.step, &lbp)?)
        })
        .collect::<Result<_, CliError>>()?;
    let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
    let descriptors = ndarray::concatenate(Axis(0), &views).map_err(|e| CliError::Runtime(e.to_string()))?;
    let seed = ctx.opts.seed.unwrap_or(cfg.codebook_seed);
    let book = build_codebook(&descriptors, cfg.codebook_size, seed, cfg.codebook_iterations)
        .map_err(CliError::input)?;
    let path = ctx.codebook_path();
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    write_codebook(&path, &book, &[ctx.provenance(seed)])?;
    println!(
        "codebook of {} centres from {} descriptors, inertia {:.6}, written to {}",
        book.size(),
        descriptors.nrows(),
        book.inertia,
        path.display()
    );
    Ok(())
}

/// The training table (after an optional `--fraction` split) and the held
/// out part, both L2-normalized.
struct Prepared {
    train: FeatureTable<f64>,
    test: Option<FeatureTable<f64>>,
}

fn prepare(ctx: &Context, seed: u64) -> Result<Prepared, CliError> {
    let table = ctx.load_table()?.l2_normalized();
    match ctx.opts.fraction {
        None => Ok(Prepared { train: table, test: None }),
        Some(f) => {
            let split = stratified_split(&table, f, seed).map_err(CliError::input)?;
            let out = ctx.out_dir();
            fs::create_dir_all(&out)?;
            write_split_manifest(out.join("split.csv"), &split, &table, &[ctx.provenance(seed)])?;
            Ok(Prepared {
                train: table.subset(&split.train_indices)?,
                test: Some(table.subset(&split.test_indices)?),
            })
        }
    }
}

fn fit_method(ctx: &Context) -> Method {
    if ctx.opts.no_heuristic {
        Method::MklLp {
            p: ctx.opts.p.unwrap_or(2.0),
        }
    } else {
        if ctx.opts.p.is_some() {
            log::warn!("--p only applies with --no-heuristic; the heuristic scores sets with p = 2");
        }
        Method::HeuristicMkl
    }
}

fn fit(ctx: &Context) -> Result<(Prepared, Fit<f64>), CliError> {
    let seed = ctx.seed();
    let data = prepare(ctx, seed)?;
    let method = fit_method(ctx);
    let fit = Workspace::new(&data.train, &ctx.config.settings, seed)
        .map_err(CliError::input)?
        .fit(method)?;
    println!(
        "{method}: C = {}, CV accuracy {:.4}, {} kernels",
        fit.choice.c,
        fit.choice.cv_accuracy,
        fit.model.specs.len()
    );
    Ok((data, fit))
}

fn write_selection(ctx: &Context, fit: &Fit<f64>) -> Result<(), CliError> {
    let out = ctx.out_dir();
    let prov = ctx.provenance(ctx.seed());
    let specs: Vec<String> = fit.model.specs.iter().map(|s| s.to_string()).collect();
    write_text(&out.join("selected.txt"), &prov, &(specs.join("\n") + "\n"))?;
    if let Some(sel) = &fit.selection {
        write_json(&out.join("selection.json"), &prov, &sel.trace)?;
        println!(
            "selected {} kernels in {} passes ({:?})",
            sel.indices.len(),
            sel.trace.iterations.len(),
            sel.trace.terminated_reason
        );
    }
    Ok(())
}

pub fn select(ctx: &Context) -> Result<(), CliError> {
    let (_, fit) = fit(ctx)?;
    write_selection(ctx, &fit)
}

pub fn train(ctx: &Context) -> Result<(), CliError> {
    let (data, fit) = fit(ctx)?;
    write_selection(ctx, &fit)?;
    let path = ctx.out_dir().join("model.json");
    write_json(&path, &ctx.provenance(ctx.seed()), &fit.model)?;
    if let Some(test) = &data.test {
        let pred = predict_multiclass(&fit.model, test)?;
        println!("held-out accuracy {:.4}", accuracy(test.labels(), &pred)?);
    }
    println!("model written to {}", path.display());
    Ok(())
}

fn read_model(path: &Path) -> Result<MulticlassModel<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    if let Some(map) = value.as_object_mut() {
        map.remove("provenance");
    }
    serde_json::from_value(value).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn predict(ctx: &Context) -> Result<(), CliError> {
    let path = ctx.opts.model.clone().unwrap_or_else(|| ctx.out_dir().join("model.json"));
    if !path.is_file() {
        return Err(CliError::Validation(format!("model {} does not exist", path.display())));
    }
    let model = read_model(&path)?;
    let table = ctx.load_table()?.l2_normalized();
    let pred = predict_multiclass(&model, &table).map_err(CliError::input)?;
    let mut body = String::from("id,predicted,label\n");
    let mut hits = 0;
    for (i, &p) in pred.iter().enumerate() {
        let predicted = &model.class_names[p];
        let truth = &table.class_names()[table.labels()[i]];
        hits += usize::from(predicted == truth);
        body.push_str(&format!("{},{predicted},{truth}\n", table.sample_ids()[i]));
    }
    let out = ctx.out_dir().join("predictions.csv");
    write_text(&out, &ctx.provenance(ctx.seed()), &body)?;
    println!(
        "accuracy {:.4} over {} samples; predictions written to {}",
        hits as f64 / pred.len() as f64,
        pred.len(),
        out.display()
    );
    Ok(())
}

fn file_tag(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' }).collect()
}

fn write_report_files(ctx: &Context, report: &BenchmarkReport, prov: &str, plots: bool) -> Result<(), CliError> {
    let out = ctx.out_dir();
    write_text(&out.join("table.csv"), prov, &table_csv(report))?;
    if !plots {
        return Ok(());
    }
    for &fraction in &report.config.fractions {
        for method in &report.config.methods {
            let curve = curve_rows(report, method, fraction);
            if !curve.is_empty() {
                let mut body = String::from("iteration,accuracy\n");
                for (t, acc) in curve {
                    body.push_str(&format!("{t},{acc}\n"));
                }
                let name = format!("curve_{}_{}.csv", file_tag(method), fraction);
                write_text(&out.join(name), prov, &body)?;
            }
            let weights = weight_rows(report, method, fraction);
            if !weights.is_empty() && method.parse::<Method>().is_ok_and(|m| m.uses_mkl_bank()) {
                let mut body = String::from("class,spec,beta\n");
                for (class, spec, beta) in weights {
                    body.push_str(&format!("{class},{spec},{beta}\n"));
                }
                let name = format!("weights_{}_{}.csv", file_tag(method), fraction);
                write_text(&out.join(name), prov, &body)?;
            }
        }
    }
    Ok(())
}

pub fn benchmark(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let table = ctx.load_table()?;
    let seed = ctx.seed();
    let mut methods = cfg.benchmark_methods(table.n_views());
    if ctx.opts.no_heuristic {
        methods.retain(|m| *m != Method::HeuristicMkl);
    }
    if let Some(p) = ctx.opts.p {
        methods.retain(|m| !matches!(m, Method::MklLp { .. }));
        methods.push(Method::MklLp { p });
    }
    let fractions = ctx.opts.fraction.map_or_else(|| cfg.fractions.clone(), |f| vec![f]);
    let mut plan = BenchmarkPlan::new(methods, fractions, cfg.repetitions, seed);
    plan.settings = cfg.settings.clone();
    let out = ctx.out_dir();
    let store = FileStore::new(out.join("cache").join("results"))?;
    let mut report = run_benchmark(&table, &plan, Some(&store)).map_err(CliError::input)?;
    for f in &report.failures {
        log::warn!("{} at fraction {} repetition {}: {}", f.method, f.fraction, f.repetition, f.error);
    }
    let prov = ctx.provenance(seed);
    report.provenance = Some(prov.clone());
    let mut value = serde_json::to_value(&report)?;
    value
        .as_object_mut()
        .expect("report serializes to an object")
        .insert("run_config".into(), cfg.text.clone().into());
    fs::create_dir_all(&out)?;
    fs::write(out.join("report.json"), serde_json::to_string_pretty(&value)? + "\n")?;
    write_report_files(ctx, &report, &prov, ctx.opts.emit_plots)?;
    print!("{}", table_csv(&report));
    if !report.failures.is_empty() {
        println!("{} repetitions failed; see report.json", report.failures.len());
    }
    Ok(())
}

pub fn report(ctx: &Context) -> Result<(), CliError> {
    let path = ctx.out_dir().join("report.json");
    let text = fs::read_to_string(&path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let report: BenchmarkReport =
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let prov = report
        .provenance
        .clone()
        .unwrap_or_else(|| ctx.provenance(report.config.base_seed));
    write_report_files(ctx, &report, &prov, true)?;
    print!("{}", table_csv(&report));
    Ok(())
}
