use atd_core::clustering::{
    bisection_cut, read_cluster_table, root_tree, subcluster, write_cluster_table, RootStrategy,
};
use atd_core::ingest::{read_dump_path, validate_dump};
use atd_core::matrix::{
    build_matrix, filter_languages, read_matrix, write_matrix_json, write_matrix_tsv, Corpus,
    MatrixConfig, MissingPolicy, QualityTable,
};
use atd_core::phylo::{cophenetic, nj_build, parse_newick, to_newick_with_comment};
use atd_core::report::{
    export_boxdata, export_geo, export_heatmap, write_blocks, write_boxdata, write_geojson,
    RunManifest,
};
use atd_core::stats::{parse_wordorder_report, word_order_compare, write_wordorder_report, Registry, Sided};
use atd_core::transport::DistanceKind;
use atd_core::{AtdError, Result};
use clap::{Parser, Subcommand, ValueEnum};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "atd", version, about = "Attention transport distances, trees and clusters")]
struct Cli {
    /// Seed recorded in run manifests (the pipeline itself draws no randomness).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for parallel steps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value = "warn")]
    log_level: log::LevelFilter,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Missing {
    Strict,
    Drop,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    W2,
    Cramer,
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Two,
    Less,
    Greater,
}

#[derive(Subcommand)]
enum Command {
    /// Check an ADIST v1 dump and report every violation.
    Validate {
        #[arg(long)]
        dump: PathBuf,
        /// Also require languages to be registered.
        #[arg(long)]
        registry: Option<PathBuf>,
    },
    /// Build the language distance matrix from a dump.
    Distances {
        #[arg(long)]
        dump: PathBuf,
        /// Keep languages whose quality mean exceeds this value.
        #[arg(long)]
        threshold: Option<f64>,
        /// Quality table with per-language means and selected sentences.
        #[arg(long)]
        quality: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "w2")]
        metric: Metric,
        #[arg(long, value_enum, default_value = "strict")]
        missing: Missing,
        #[arg(long)]
        out: PathBuf,
        /// Also write the structured JSON form here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Neighbor-Joining tree from a matrix.
    Tree {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Correlation between matrix and tree distances.
    Cophenetic {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Root, cut and sub-cluster a tree.
    Clusters {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, default_value_t = 7)]
        k: usize,
        #[arg(long, default_value_t = 3)]
        max_minor: usize,
        #[arg(long, default_value_t = 50)]
        max_iter: usize,
        /// `midpoint` or `outgroup:<label>`.
        #[arg(long, default_value = "midpoint")]
        rooting: RootStrategy,
        #[arg(long)]
        out: PathBuf,
    },
    /// Same-order vs different-order comparison for one language.
    Wordorder {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        focal: String,
        /// Defaults to $ATD_REGISTRY, then the built-in registry.
        #[arg(long)]
        registry: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "two")]
        sided: Side,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cluster-ordered matrix plus a `.blocks.tsv` sidecar.
    ExportHeatmap {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        clusters: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// GeoJSON points colored by cluster.
    ExportGeo {
        #[arg(long)]
        clusters: PathBuf,
        #[arg(long)]
        registry: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Long-format box-plot rows and summaries from word-order reports.
    ExportBoxdata {
        #[arg(long = "report", required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn manifest(cli: &Cli, command: &str) -> RunManifest {
    let mut m = RunManifest::new(command);
    m.config("seed", cli.seed);
    m
}

fn registry_input(m: &mut RunManifest, path: Option<&Path>) -> Result<Registry> {
    let resolved = path
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(atd_core::stats::REGISTRY_ENV).filter(|p| !p.is_empty()).map(PathBuf::from));
    match &resolved {
        Some(p) => {
            m.input_file("registry", p)?;
        }
        None => {
            let builtin = serde_json::to_vec(&Registry::builtin())?;
            m.input_bytes("registry", &builtin);
        }
    }
    Registry::resolve(resolved.as_deref())
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Validate { dump, registry } => {
            let d = read_dump_path(dump)?;
            let reg = registry.as_deref().map(Registry::load).transpose()?;
            let report = validate_dump(&d, reg.as_ref());
            print!("{report}");
            Ok(if report.is_ok() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Distances {
            dump,
            threshold,
            quality,
            metric,
            missing,
            out,
            json,
        } => {
            let kind = match metric {
                Metric::W2 => DistanceKind::W2,
                Metric::Cramer => DistanceKind::Cramer,
            };
            let mut m = manifest(cli, "distances");
            m.input_file("dump", dump)?;
            let mut cfg = MatrixConfig {
                kind,
                missing: match missing {
                    Missing::Strict => MissingPolicy::Strict,
                    Missing::Drop => MissingPolicy::Drop,
                },
                ..MatrixConfig::default()
            };
            match (quality, threshold) {
                (Some(q), t) => {
                    m.input_file("quality", q)?;
                    let table = QualityTable::parse(&std::fs::read_to_string(q)?)?;
                    let tau = t.or(table.threshold).ok_or_else(|| {
                        AtdError::Invalid("no --threshold given and the quality table has none".into())
                    })?;
                    m.config("threshold", tau);
                    cfg.languages = Some(filter_languages(&table, tau));
                    cfg.selected_sentences = table.selected_sentences();
                }
                (None, Some(_)) => {
                    return Err(AtdError::Invalid("--threshold needs --quality".into()));
                }
                (None, None) => {}
            }
            m.config("metric", kind).config(
                "missing",
                match cfg.missing {
                    MissingPolicy::Strict => "strict",
                    MissingPolicy::Drop => "drop",
                },
            );
            let d = read_dump_path(dump)?;
            let corpus = Corpus::from_dump(&d)?;
            let built = build_matrix(&corpus, &cfg)?;
            for w in &built.warnings {
                log::warn!("{w}");
            }
            let digest = m.digest();
            write_matrix_tsv(create(out)?, &built.matrix, Some(&digest))?;
            m.write_sidecar(out)?;
            if let Some(j) = json {
                write_matrix_json(create(j)?, &built.matrix, Some(&digest))?;
            }
            log::info!("wrote {} x {} matrix to {}", built.matrix.len(), built.matrix.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Tree { matrix, out } => {
            let mut m = manifest(cli, "tree");
            m.input_file("matrix", matrix)?;
            let d = read_matrix(matrix)?.matrix;
            let tree = nj_build(&d)?;
            let mut w = create(out)?;
            writeln!(w, "{}", to_newick_with_comment(&tree, &m.comment()))?;
            w.flush()?;
            m.write_sidecar(out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Cophenetic { matrix, tree, out } => {
            let mut m = manifest(cli, "cophenetic");
            m.input_file("matrix", matrix)?.input_file("tree", tree)?;
            let d = read_matrix(matrix)?.matrix;
            let (t, _) = parse_newick(&std::fs::read_to_string(tree)?)?;
            let r = cophenetic(&d, &t)?;
            let show = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.16e}"));
            let text = format!(
                "# {}\nmeasure\tvalue\npearson\t{}\nspearman\t{}\npairs\t{}\n",
                m.comment(),
                show(r.pearson),
                show(r.spearman),
                r.pairs
            );
            match out {
                Some(p) => {
                    std::fs::write(p, &text)?;
                    m.write_sidecar(p)?;
                }
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Clusters {
            tree,
            k,
            max_minor,
            max_iter,
            rooting,
            out,
        } => {
            let mut m = manifest(cli, "clusters");
            m.input_file("tree", tree)?
                .config("k", k)
                .config("max_minor", max_minor)
                .config("max_iter", max_iter)
                .config("rooting", rooting);
            let (t, _) = parse_newick(&std::fs::read_to_string(tree)?)?;
            let rooted = root_tree(&t, rooting)?;
            let majors = bisection_cut(&rooted, *k, *max_iter)?;
            if majors.k != *k {
                log::warn!("closest achievable cut has {} clusters (target {k})", majors.k);
            }
            let full = subcluster(&rooted, &majors, *max_minor, *max_iter)?;
            write_cluster_table(create(out)?, &full, Some(&m.digest()))?;
            m.write_sidecar(out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Wordorder {
            matrix,
            focal,
            registry,
            sided,
            out,
        } => {
            let sided = match sided {
                Side::Two => Sided::Two,
                Side::Less => Sided::Less,
                Side::Greater => Sided::Greater,
            };
            let mut m = manifest(cli, "wordorder");
            m.input_file("matrix", matrix)?.config("focal", focal).config("sided", sided);
            let reg = registry_input(&mut m, registry.as_deref())?;
            let d = read_matrix(matrix)?.matrix;
            let c = word_order_compare(&d, focal, &reg, sided)?;
            write_wordorder_report(create(out)?, &c, Some(&m.digest()))?;
            m.write_sidecar(out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::ExportHeatmap { matrix, clusters, out } => {
            let mut m = manifest(cli, "export-heatmap");
            m.input_file("matrix", matrix)?.input_file("clusters", clusters)?;
            let d = read_matrix(matrix)?.matrix;
            let (c, _) = read_cluster_table(clusters)?;
            let h = export_heatmap(&d, &c)?;
            let digest = m.digest();
            write_matrix_tsv(create(out)?, &h.matrix, Some(&digest))?;
            let mut blocks = out.as_os_str().to_owned();
            blocks.push(".blocks.tsv");
            write_blocks(create(Path::new(&blocks))?, &h, Some(&digest))?;
            m.write_sidecar(out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::ExportGeo { clusters, registry, out } => {
            let mut m = manifest(cli, "export-geo");
            m.input_file("clusters", clusters)?;
            let reg = registry_input(&mut m, registry.as_deref())?;
            let (c, _) = read_cluster_table(clusters)?;
            let features = export_geo(&c, &reg)?;
            write_geojson(create(out)?, &features, Some(&m.digest()))?;
            m.write_sidecar(out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::ExportBoxdata { reports, out } => {
            let mut m = manifest(cli, "export-boxdata");
            let mut comparisons = Vec::with_capacity(reports.len());
            for (i, r) in reports.iter().enumerate() {
                m.input_file(&format!("report{}", i + 1), r)?;
                comparisons.push(parse_wordorder_report(&std::fs::read_to_string(r)?)?.0);
            }
            let b = export_boxdata(&comparisons)?;
            write_boxdata(create(out)?, &b, Some(&m.digest()))?;
            m.write_sidecar(out)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
