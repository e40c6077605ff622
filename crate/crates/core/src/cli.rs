use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};

use superpixel_hierarchy::metrics::{evaluate, evaluate_many, DEFAULT_EPSILON};
use superpixel_hierarchy::pnm::{self, encode_labels, encode_overlay};
use superpixel_hierarchy::{
    build_hierarchy, ColorSpace, EdgeConfidenceMap, Error, FeatureConfig, GroundTruth, Hierarchy,
    Image, LabelFormat, MetricsReport, Result, Segmentation,
};

/// Superpixel hierarchy segmentation, multi-scale extraction and evaluation.
#[derive(Debug, Parser)]
#[command(name = "sphier", version)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the hierarchy and write one segmentation.
    Segment(SegmentArgs),
    /// Build once and write several scales.
    Multiscale(MultiscaleArgs),
    /// Score a label map against one or more ground truths.
    Eval(EvalArgs),
    /// Time hierarchy construction and extraction.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct FeatureArgs {
    /// Round from which color histograms replace mean colors.
    #[arg(long, default_value_t = 4)]
    hist_iter: usize,
    /// Histogram bins per channel.
    #[arg(long, default_value_t = 20)]
    hist_bins: usize,
    /// Compare colors in CIELAB instead of RGB.
    #[arg(long)]
    lab: bool,
    /// Floor added to the average boundary confidence.
    #[arg(long, default_value_t = 0.01)]
    edge_eps: f64,
}

impl FeatureArgs {
    fn config(&self, with_edges: bool) -> FeatureConfig {
        FeatureConfig {
            hist_switch_iteration: self.hist_iter,
            hist_bins: self.hist_bins,
            edge_epsilon: self.edge_eps,
            use_edge_feature: with_edges,
            color_space: if self.lab {
                ColorSpace::Lab
            } else {
                ColorSpace::Rgb
            },
            ..FeatureConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Pgm16,
    Csv,
}

impl From<FormatArg> for LabelFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Pgm16 => LabelFormat::Pgm16,
            FormatArg::Csv => LabelFormat::Csv,
        }
    }
}

#[derive(Debug, Args)]
struct SegmentArgs {
    /// Input P5/P6 image.
    #[arg(long)]
    input: PathBuf,
    /// Edge-confidence map (P5), enables the edge feature.
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Number of superpixels.
    #[arg(long)]
    k: usize,
    /// Output label map.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "pgm16")]
    format: FormatArg,
    /// Also write a P6 boundary overlay.
    #[arg(long)]
    overlay: Option<PathBuf>,
    /// Also write the dendrogram.
    #[arg(long)]
    dendrogram: Option<PathBuf>,
    #[command(flatten)]
    features: FeatureArgs,
}

#[derive(Debug, Args)]
struct MultiscaleArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Comma-separated superpixel counts.
    #[arg(long, value_delimiter = ',', required = true)]
    ks: Vec<usize>,
    #[arg(long)]
    out_dir: PathBuf,
    /// Verify that every scale refines all coarser ones.
    #[arg(long)]
    check_nesting: bool,
    #[arg(long)]
    dendrogram: Option<PathBuf>,
    #[command(flatten)]
    features: FeatureArgs,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Segmentation label map (P5 or CSV).
    #[arg(long)]
    labels: PathBuf,
    /// Ground-truth label map; repeat to average over several.
    #[arg(long, required = true)]
    gt: Vec<PathBuf>,
    /// Boundary-recall tolerance in pixels.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    eps: usize,
    /// Print a comma-separated table instead of one report line.
    #[arg(long)]
    csv: bool,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Runs per measurement; the median is reported.
    #[arg(long, default_value_t = 1)]
    repeat: usize,
    #[command(flatten)]
    features: FeatureArgs,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Segment(a) => segment(a),
        Command::Multiscale(a) => multiscale(a),
        Command::Eval(a) => eval(a),
        Command::Bench(a) => bench(a),
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn load_inputs(input: &Path, edges: Option<&Path>) -> Result<(Image, Option<EdgeConfidenceMap>)> {
    let img = pnm::read_image(input)?;
    let em = edges.map(pnm::read_edge_map).transpose()?;
    if let Some(em) = &em {
        em.check_matches(&img)?;
    }
    Ok((img, em))
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::ScaleOutOfRange { k, n });
    }
    Ok(())
}

/// Writes every file or none: on failure, files already written are
/// removed.
fn write_all(outputs: &[(PathBuf, Vec<u8>)]) -> Result<()> {
    for (i, (path, bytes)) in outputs.iter().enumerate() {
        if let Err(e) = std::fs::write(path, bytes) {
            for (done, _) in &outputs[..i] {
                let _ = std::fs::remove_file(done);
            }
            return Err(Error::Io {
                path: path.clone(),
                source: e,
            });
        }
    }
    Ok(())
}

fn timed_build(
    img: &Image,
    em: Option<&EdgeConfidenceMap>,
    cfg: &FeatureConfig,
) -> Result<(Hierarchy, Duration)> {
    let t = Instant::now();
    let h = build_hierarchy(img, em, cfg)?;
    Ok((h, t.elapsed()))
}

fn segment(a: SegmentArgs) -> Result<()> {
    let (img, em) = load_inputs(&a.input, a.edges.as_deref())?;
    check_k(a.k, img.pixel_count())?;
    let cfg = a.features.config(em.is_some());
    cfg.validate()?;
    let (h, took) = timed_build(&img, em.as_ref(), &cfg)?;
    let seg = h.extract(a.k)?;

    let mut outputs = vec![(a.out.clone(), encode_labels(&seg, a.format.into())?)];
    if let Some(path) = &a.overlay {
        outputs.push((path.clone(), encode_overlay(&img, &seg)?));
    }
    if let Some(path) = &a.dendrogram {
        outputs.push((path.clone(), h.to_dendrogram_bytes()));
    }
    write_all(&outputs)?;
    println!(
        "built n={} rounds={} ms={:.3}",
        h.leaf_count(),
        h.iteration_count(),
        ms(took)
    );
    Ok(())
}

fn multiscale(a: MultiscaleArgs) -> Result<()> {
    let (img, em) = load_inputs(&a.input, a.edges.as_deref())?;
    let n = img.pixel_count();
    let mut ks: Vec<usize> = Vec::with_capacity(a.ks.len());
    for &k in &a.ks {
        check_k(k, n)?;
        if ks.contains(&k) {
            eprintln!("warning: duplicate scale k={k} ignored");
        } else {
            ks.push(k);
        }
    }
    let cfg = a.features.config(em.is_some());
    cfg.validate()?;
    let (h, took) = timed_build(&img, em.as_ref(), &cfg)?;
    println!(
        "built n={} rounds={} ms={:.3}",
        h.leaf_count(),
        h.iteration_count(),
        ms(took)
    );

    let mut segs = Vec::with_capacity(ks.len());
    let mut outputs = Vec::with_capacity(ks.len() + 1);
    for &k in &ks {
        let t = Instant::now();
        let seg = h.extract(k)?;
        let took = t.elapsed();
        let path = a.out_dir.join(format!("labels_k{k}.pgm"));
        println!("extract k={k} ms={:.3} file={}", ms(took), path.display());
        outputs.push((path, encode_labels(&seg, LabelFormat::Pgm16)?));
        segs.push(seg);
    }
    if a.check_nesting {
        check_nesting(&segs)?;
        println!("nesting ok scales={}", segs.len());
    }
    if let Some(path) = &a.dendrogram {
        outputs.push((path.clone(), h.to_dendrogram_bytes()));
    }
    write_all(&outputs)
}

fn check_nesting(segs: &[Segmentation]) -> Result<()> {
    let mut order: Vec<&Segmentation> = segs.iter().collect();
    order.sort_by_key(|s| std::cmp::Reverse(s.k()));
    for pair in order.windows(2) {
        if !pair[0].refines(pair[1]) {
            return Err(Error::Invariant(format!(
                "k={} does not refine k={}",
                pair[0].k(),
                pair[1].k()
            )));
        }
    }
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let grid = pnm::read_labels(&a.labels)?;
    let seg = Segmentation::from_labels(grid.width, grid.height, &grid.labels)?;
    let mut gts = Vec::with_capacity(a.gt.len());
    for path in &a.gt {
        let g = pnm::read_labels(path)?;
        if g.width != seg.width() || g.height != seg.height() {
            return Err(Error::DimensionMismatch {
                what: "ground truth",
                expected: (seg.width(), seg.height()),
                found: (g.width, g.height),
            });
        }
        gts.push(GroundTruth::new(g.width, g.height, &g.labels)?);
    }
    let mean = evaluate_many(&seg, &gts, a.eps)?;
    if a.csv {
        println!("gt,{}", MetricsReport::CSV_HEADER);
        for (path, g) in a.gt.iter().zip(&gts) {
            println!("{},{}", path.display(), evaluate(&seg, g, a.eps)?.csv_row());
        }
        println!("mean,{}", mean.csv_row());
    } else {
        println!("{mean}");
    }
    Ok(())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

const BENCH_LADDER: [usize; 10] = [100, 200, 300, 400, 500, 600, 700, 800, 900, 1000];

fn bench(a: BenchArgs) -> Result<()> {
    if a.repeat == 0 {
        return Err(Error::InvalidInput("--repeat must be at least 1".into()));
    }
    let (img, em) = load_inputs(&a.input, a.edges.as_deref())?;
    let cfg = a.features.config(em.is_some());
    cfg.validate()?;
    let n = img.pixel_count();
    let ladder: Vec<usize> = BENCH_LADDER.iter().copied().filter(|&k| k <= n).collect();

    let mut builds = Vec::with_capacity(a.repeat);
    let mut extracts = vec![Vec::with_capacity(a.repeat); ladder.len()];
    let mut rounds = 0;
    for _ in 0..a.repeat {
        let (h, took) = timed_build(&img, em.as_ref(), &cfg)?;
        builds.push(ms(took));
        rounds = h.iteration_count();
        for (i, &k) in ladder.iter().enumerate() {
            let t = Instant::now();
            let seg = h.extract(k)?;
            extracts[i].push(ms(t.elapsed()));
            debug_assert_eq!(seg.k(), k);
        }
    }
    let build_ms = median(builds);
    println!(
        "build n={n} rounds={rounds} repeat={} ms={build_ms:.3}",
        a.repeat
    );
    let mut total = 0.0;
    for (k, times) in ladder.iter().zip(extracts) {
        let t = median(times);
        total += t;
        println!("extract k={k} ms={t:.3}");
    }
    println!("extract_total scales={} ms={total:.3}", ladder.len());
    println!("pixels_per_sec={:.0}", n as f64 / (build_ms / 1e3));
    Ok(())
}
