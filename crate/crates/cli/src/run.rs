//! Command implementations. Every command resolves one configuration
//! document, writes `run.json` plus its outputs under the output directory,
//! and fails with `check_failed` when a configured bound is violated.
//! Outputs are deterministic: same config and seed, same bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use qsmear::example1::Example1;
use qsmear::io;
use qsmear::measure::{
    convolve, integrate, moment, MomentOptions, ProbabilityMeasure, ScalarMeasure, Verdict,
};
use qsmear::phasespace::{
    build_phase_space_povm, marginal_convolution_check, marginal_moment_operator, Axis,
    PhaseSpaceGrid,
};
use qsmear::sampling::{
    empirical_moment, moment_standard_deviation, predicted_moment, sample,
};
use qsmear::semispectral::{
    moment_operator_binomial, moment_operator_direct, smear, spectral_measure_of,
};

use crate::config::{
    self, AxisSpec, ConvolveConfig, Example1Config, MomentsConfig, PhasespaceConfig, PovmSpec,
    SampleConfig, SmearConfig,
};
use crate::{CliError, CommonArgs};

pub fn dispatch(command: &'static str, args: &CommonArgs) -> Result<(), CliError> {
    let (text, preset) = resolve_config(command, args)?;
    fs::create_dir_all(&args.out)?;
    let ctx = Ctx {
        command,
        out: args.out.clone(),
        sha: hex::encode(Sha256::digest(text.as_bytes())),
        preset,
    };
    match command {
        "convolve" => cmd_convolve(parse(&text)?, &ctx),
        "moments" => cmd_moments(parse(&text)?, &ctx),
        "example1" => cmd_example1(parse(&text)?, &ctx),
        "smear" => cmd_smear(parse(&text)?, &ctx),
        "phasespace" => cmd_phasespace(parse(&text)?, &ctx),
        "sample" => cmd_sample(parse(&text)?, &ctx, args.seed),
        _ => unreachable!("unknown command {command}"),
    }
}

fn resolve_config(
    command: &'static str,
    args: &CommonArgs,
) -> Result<(String, Option<String>), CliError> {
    match (&args.config, &args.preset) {
        (Some(_), Some(_)) => Err(CliError::config(
            "pass either --config or --preset, not both",
        )),
        (Some(path), None) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::config(format!("cannot read {}: {e}", path.display()))
            })?;
            Ok((text, None))
        }
        (None, Some(name)) => match config::preset(command, name) {
            Some(text) => Ok((text.to_string(), Some(name.clone()))),
            None => Err(CliError::config(format!(
                "unknown preset {name:?} for {command}; available: {}",
                config::preset_names(command).join(", ")
            ))),
        },
        (None, None) => {
            if command == "example1" {
                // The construction is fully determined by its cutoff, which
                // has a default.
                Ok(("{}".to_string(), None))
            } else {
                Err(CliError::config(format!(
                    "missing --config or --preset; available presets: {}",
                    config::preset_names(command).join(", ")
                )))
            }
        }
    }
}

fn parse<'a, T: serde::Deserialize<'a>>(text: &'a str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::config(format!("invalid config: {e}")))
}

struct Ctx {
    command: &'static str,
    out: PathBuf,
    sha: String,
    preset: Option<String>,
}

impl Ctx {
    fn headers(&self) -> Vec<String> {
        vec![
            format!("command: {}", self.command),
            format!("config_sha256: {}", self.sha),
            format!("package: qsmear-cli {}", env!("CARGO_PKG_VERSION")),
        ]
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write_run(&self, seed: Option<u64>) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct RunRecord<'a> {
            command: &'a str,
            preset: Option<&'a str>,
            config_sha256: &'a str,
            package_version: &'a str,
            seed: Option<u64>,
        }
        let record = serde_json::to_string_pretty(&RunRecord {
            command: self.command,
            preset: self.preset.as_deref(),
            config_sha256: &self.sha,
            package_version: env!("CARGO_PKG_VERSION"),
            seed,
        })?;
        fs::write(self.path("run.json"), record)?;
        Ok(())
    }
}

fn write_csv(
    path: &Path,
    headers: &[String],
    schema: &str,
    rows: &[String],
) -> Result<(), CliError> {
    let mut text = String::new();
    for line in headers {
        text.push_str("# ");
        text.push_str(line);
        text.push('\n');
    }
    text.push_str(schema);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

/// Saturation ladder above the support radius, the same windows the moment
/// gate probes by default.
fn support_ladder(m: &ScalarMeasure) -> Vec<f64> {
    let r = m.support_radius().max(1.0);
    vec![r, 1.25 * r, 1.5 * r]
}

fn write_moment_reports(
    m: &ScalarMeasure,
    kmax: u32,
    radii: &[f64],
    opts: &MomentOptions,
    require_converged: bool,
    ctx: &Ctx,
) -> Result<(), CliError> {
    let mut bad: Vec<String> = Vec::new();
    for k in 0..=kmax {
        let report = moment(m, k, radii, opts)?;
        let mut out = Vec::new();
        io::write_moment_report_csv(&report, &ctx.headers(), &mut out)?;
        fs::write(ctx.path(&format!("moments_k{k}.csv")), out)?;
        if report.verdict != Verdict::Converged {
            bad.push(format!("k={k} {}", report.verdict));
        }
    }
    if require_converged && !bad.is_empty() {
        return Err(CliError::check_failed(format!(
            "moments did not converge: {}",
            bad.join(", ")
        )));
    }
    Ok(())
}

fn cmd_convolve(cfg: ConvolveConfig, ctx: &Ctx) -> Result<(), CliError> {
    ctx.write_run(None)?;
    let mu = cfg.mu.build()?;
    let nu = cfg.nu.build()?;
    let conv = convolve(&mu, &nu)?;
    io::save_measure(&conv, &ctx.path("convolution.json"))?;

    let radii = cfg.radii.unwrap_or_else(|| support_ladder(&conv));
    write_moment_reports(
        &conv,
        cfg.kmax,
        &radii,
        &cfg.gate.options(),
        cfg.require_converged,
        ctx,
    )
}

fn cmd_moments(cfg: MomentsConfig, ctx: &Ctx) -> Result<(), CliError> {
    ctx.write_run(None)?;
    let mu = cfg.mu.build()?;
    write_moment_reports(
        &mu,
        cfg.kmax,
        &cfg.radii,
        &cfg.gate.options(),
        cfg.require_converged,
        ctx,
    )
}

fn cmd_example1(cfg: Example1Config, ctx: &Ctx) -> Result<(), CliError> {
    ctx.write_run(None)?;
    let ex = Example1::with_dyadic(cfg.cutoff)?;
    let conv = ex.convolution()?;
    io::save_measure(&conv, &ctx.path("convolution.json"))?;

    // Point masses of the convolution on the integer range covering its
    // support; the headline claim is the zero at every even integer.
    let f_int = integrate(|x| ex.f_complex(x), &conv)?;
    let span = 2 * cfg.cutoff as i64;
    let mut rows = Vec::new();
    for n in -span..=span {
        let w: num_complex::Complex64 = conv
            .atoms()
            .iter()
            .filter(|&&(x, _)| (x - n as f64).abs() <= 1e-9)
            .map(|&(_, w)| w)
            .sum();
        rows.push(format!("{n},{:.17e},{:.17e},{:.17e}", w.re, w.im, w.norm()));
    }
    let mut headers = ctx.headers();
    headers.push(format!("cutoff: {}", cfg.cutoff));
    headers.push(format!("integral_of_f: {:.17e}", f_int.norm()));
    write_csv(&ctx.path("lambda.csv"), &headers, "n,re,im,abs", &rows)?;

    let mut slices = ex.even_slices();
    slices.sort_unstable();
    let rows = slices
        .iter()
        .map(|&n| {
            ex.slice_absolute_integral(n)
                .map(|s| format!("{n},{s:.17e}"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    write_csv(
        &ctx.path("slices.csv"),
        &ctx.headers(),
        "n,absolute_integral",
        &rows,
    )
}

fn cmd_smear(cfg: SmearConfig, ctx: &Ctx) -> Result<(), CliError> {
    ctx.write_run(None)?;
    let a = cfg.operator.build()?;
    let mu = ProbabilityMeasure::normalized(cfg.mu.build()?)?;
    let e = spectral_measure_of(&a)?;

    let edges = match cfg.edges {
        Some(edges) => edges,
        None => isolating_edges(e.eigenvalues(), mu.atoms()).ok_or_else(|| {
            CliError::config(
                "cannot derive bin edges (noise measure has no atoms, or \
                 eigenvalue-atom sums closer than 1e-9); pass explicit edges",
            )
        })?,
    };
    let smeared = smear(&mu, &e, &edges)?;
    io::save_povm(&smeared, &ctx.path("povm.json"))?;

    let opts = cfg.gate.options();
    let probe = cfg.probe_radii.as_deref();
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for k in 0..=cfg.kmax {
        let direct = moment_operator_direct(&smeared, k);
        let binomial = match moment_operator_binomial(&mu, &a, k, probe, &opts) {
            Ok(op) => op,
            Err(qsmear::Error::NonConvergedMoment { order, report }) => {
                // Refusal: emit the windowed report that failed the gate,
                // then surface the divergence.
                let mut out = Vec::new();
                io::write_moment_report_csv(&report, &ctx.headers(), &mut out)?;
                fs::write(ctx.path(&format!("refusal_k{order}.csv")), out)?;
                return Err(qsmear::Error::NonConvergedMoment { order, report }.into());
            }
            Err(e) => return Err(e.into()),
        };
        let dist = direct.max_entry_distance(&binomial);
        worst = worst.max(dist);
        rows.push(format!("{k},{dist:.17e}"));
    }
    write_csv(
        &ctx.path("distances.csv"),
        &ctx.headers(),
        "k,max_entry_distance",
        &rows,
    )?;

    if let Some(bound) = cfg.max_distance {
        if worst > bound {
            return Err(CliError::check_failed(format!(
                "moment-operator distance {worst:e} exceeds {bound:e}"
            )));
        }
    }
    Ok(())
}

/// Midpoints isolating every eigenvalue-atom sum, so the binned smearing
/// represents each smeared point exactly.
fn isolating_edges(
    eigenvalues: &[f64],
    atoms: &[(f64, num_complex::Complex64)],
) -> Option<Vec<f64>> {
    if atoms.is_empty() {
        // A pure density smears every point; there is no canonical binning.
        return None;
    }
    let mut sums: Vec<f64> = Vec::new();
    for &l in eigenvalues {
        for &(x, _) in atoms {
            sums.push(l + x);
        }
    }
    sums.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sums.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    for w in sums.windows(2) {
        if w[1] - w[0] < 1e-9 {
            return None;
        }
    }
    Some(sums.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect())
}

fn cmd_phasespace(cfg: PhasespaceConfig, ctx: &Ctx) -> Result<(), CliError> {
    ctx.write_run(None)?;
    let t = cfg.build.seed_state()?;
    let grid = PhaseSpaceGrid::new(cfg.build.half_width, cfg.build.points_per_axis)?;
    let povm = build_phase_space_povm(&t, &grid, cfg.build.quadrature_order)?;
    io::save_phase_space_povm(&povm, &t, &ctx.headers(), &ctx.path("povm"))?;

    #[derive(Serialize)]
    struct Summary {
        captured_mass: f64,
        captured_mass_in_state: f64,
        build_dim: usize,
    }
    let summary = serde_json::to_string_pretty(&Summary {
        captured_mass: povm.captured_mass(),
        captured_mass_in_state: povm.captured_mass_in_state(&t)?,
        build_dim: povm.dim(),
    })?;
    fs::write(ctx.path("summary.json"), summary)?;

    // Marginal-as-convolution checks, both axes.
    let mut worst = 0.0f64;
    let mut moment_rows = Vec::new();
    for axis in [Axis::X, Axis::Y] {
        let check = marginal_convolution_check(
            &t,
            &grid,
            cfg.build.quadrature_order,
            axis,
            cfg.leading_block,
        )?;
        worst = worst.max(check.max_distance);

        let mut headers = ctx.headers();
        headers.push(format!("axis: {axis}"));
        headers.push(format!("leading_block: {}", check.leading_block));
        let bins = check.per_bin_distance.len();
        let rows: Vec<String> = (0..bins)
            .map(|i| {
                let lo = if i == 0 {
                    f64::NEG_INFINITY
                } else {
                    check.edges[i - 1]
                };
                let hi = if i + 1 == bins {
                    f64::INFINITY
                } else {
                    check.edges[i]
                };
                format!(
                    "{i},{lo:.17e},{hi:.17e},{:.17e},{:.17e}",
                    check.per_bin_distance[i], check.per_bin_mass_delta[i]
                )
            })
            .collect();
        write_csv(
            &ctx.path(&format!("marginal_check_{axis}.csv")),
            &headers,
            "bin,lo,hi,distance,mass_delta",
            &rows,
        )?;

        // Both moment routes on the same block: direct integration of the
        // built marginal against the closed-form operator.
        let marg = povm.marginal(axis)?;
        let block = cfg.leading_block.unwrap_or(cfg.build.dim / 2).max(1);
        for k in 0..=cfg.kmax {
            let direct = moment_operator_direct(&marg, k);
            let closed = marginal_moment_operator(&t, k, axis)?;
            let dist = direct.max_entry_distance_on_block(&closed, block);
            moment_rows.push(format!("{axis},{k},{block},{dist:.17e}"));
        }
    }
    write_csv(
        &ctx.path("moment_check.csv"),
        &ctx.headers(),
        "axis,k,block,distance",
        &moment_rows,
    )?;

    if let Some(bound) = cfg.max_distance {
        if worst > bound {
            return Err(CliError::check_failed(format!(
                "marginal check distance {worst:e} exceeds {bound:e}"
            )));
        }
    }
    Ok(())
}

fn cmd_sample(cfg: SampleConfig, ctx: &Ctx, seed_flag: Option<u64>) -> Result<(), CliError> {
    let seed = seed_flag.or(cfg.seed).unwrap_or(0);
    ctx.write_run(Some(seed))?;

    let (povm, source) = match &cfg.povm {
        PovmSpec::File { file } => (
            io::load_povm(file)?,
            format!("file:{}", file.display()),
        ),
        PovmSpec::Marginal { marginal_of, axis } => {
            let t = marginal_of.seed_state()?;
            let grid =
                PhaseSpaceGrid::new(marginal_of.half_width, marginal_of.points_per_axis)?;
            let built = build_phase_space_povm(&t, &grid, marginal_of.quadrature_order)?;
            let marg = built.marginal(axis.axis())?;
            let name = match axis {
                AxisSpec::X => "x",
                AxisSpec::Y => "y",
            };
            (marg, format!("{}.marginal_{name}", marginal_of.describe()))
        }
    };
    let state = match &cfg.state {
        Some(s) => s.build(povm.dim())?,
        None => config::default_state().build(povm.dim())?,
    };

    let s = sample(&povm, &state, cfg.n, seed, source)?;
    io::save_sample(&s, &ctx.headers(), &ctx.path("sample.csv"))?;

    let mut rows = Vec::new();
    let mut worst_z = 0.0f64;
    for k in 1..=cfg.kmax {
        let emp = empirical_moment(&s, k)?;
        let pred = predicted_moment(&povm, &state, k)?;
        let se = moment_standard_deviation(&s, k)? / (cfg.n as f64).sqrt();
        // Constant samples have zero spread; any real discrepancy is still
        // surfaced as an infinite score.
        let z = if se == 0.0 {
            if (emp - pred).abs() <= 1e-9 * (1.0 + pred.abs()) {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (emp - pred) / se
        };
        worst_z = worst_z.max(z.abs());
        rows.push(format!(
            "{k},{emp:.17e},{pred:.17e},{se:.17e},{z:.17e}"
        ));
    }
    write_csv(
        &ctx.path("moment_comparison.csv"),
        &ctx.headers(),
        "k,empirical,predicted,standard_error,z",
        &rows,
    )?;

    if let Some(bound) = cfg.zmax {
        if worst_z > bound {
            return Err(CliError::check_failed(format!(
                "moment z-score {worst_z:.3} exceeds {bound}"
            )));
        }
    }
    Ok(())
}
