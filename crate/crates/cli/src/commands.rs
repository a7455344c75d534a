use std::path::Path;

use chromapart::diagnostics::{regularity_report, DiagnosticsOptions, RegularityReport};
use chromapart::energy::{nontriviality_check, EnergyBreakdown};
use chromapart::free_palette::{init_palette_kmeans, solve_free_palette_from, MergeEvent};
use chromapart::oracle::brute_force_fixed_palette;
use chromapart::{
    fit_distortion, random_blob_mask, solve_fixed_palette, synthesize_instance, total_energy, validate_instance,
    ColorImage, DamageMask, DistortionTable, EdgeWeights, FreePaletteOptions, GreyObservation, GridGeometry, Instance,
    Labeling, ModelParams, Palette, SolveTrace, ValidationReport,
};
use serde::Serialize;

use crate::config::{
    CheckLArgs, Command, DiagnoseArgs, EnergyArgs, FitArgs, GlobalOptions, InstanceArgs, OracleArgs, RestoreArgs,
    RunConfig, SynthArgs,
};
use crate::error::{CliError, Result};
use crate::pnm::{self, Raster};
use crate::text;

/// Largest palette a label map can hold.
pub const MAX_LABELS: usize = 255;

pub fn run(config: &RunConfig) -> Result<()> {
    match &config.command {
        Command::Restore(args) => restore(config, args),
        Command::Energy(args) => energy(&config.global, args),
        Command::Oracle(args) => oracle(&config.global, args),
        Command::Diagnose(args) => diagnose(&config.global, args),
        Command::Fit(args) => fit(args),
        Command::Synth(args) => synth(&config.global, args),
        Command::CheckL(args) => check_l(args),
    }
}

fn warn(message: &str) {
    eprintln!("warning: {message}");
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize") + "\n"
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Prints the JSON to stdout and optionally writes it to `out`.
fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let json = to_json(value);
    print!("{json}");
    out.map_or(Ok(()), |path| write_file(path, json.as_bytes()))
}

fn geometry(global: &GlobalOptions, width: usize, height: usize) -> Result<GridGeometry> {
    Ok(GridGeometry::new(width, height, global.h, global.neighborhood.into())?)
}

fn params(global: &GlobalOptions) -> Result<ModelParams> {
    Ok(ModelParams::new(global.lambda, global.mu, global.p)?)
}

fn same_size(path: &Path, raster: &Raster, geom: &GridGeometry) -> Result<()> {
    if raster.width != geom.width() || raster.height != geom.height() {
        return Err(CliError::Validation(format!(
            "{} is {}x{}, expected {}x{}",
            path.display(),
            raster.width,
            raster.height,
            geom.width(),
            geom.height()
        )));
    }
    Ok(())
}

fn read_mask(path: &Path, geom: &GridGeometry) -> Result<DamageMask> {
    let raster = pnm::read(path, 1)?;
    same_size(path, &raster, geom)?;
    Ok(DamageMask::new(*geom, raster.data.iter().map(|&v| v >= 128).collect())?)
}

fn mask_raster(mask: &DamageMask) -> Raster {
    let geom = mask.geometry();
    Raster {
        width: geom.width(),
        height: geom.height(),
        channels: 1,
        data: mask.as_slice().iter().map(|&d| if d { 255 } else { 0 }).collect(),
    }
}

fn image_raster(image: &ColorImage) -> Raster {
    let geom = image.geometry();
    Raster { width: geom.width(), height: geom.height(), channels: image.channels(), data: image.to_u8() }
}

pub fn read_labels(path: &Path, geom: &GridGeometry, k: usize) -> Result<Labeling> {
    let raster = pnm::read(path, 1)?;
    same_size(path, &raster, geom)?;
    if let Some(&bad) = raster.data.iter().find(|&&v| v == 0 || usize::from(v) > k) {
        return Err(CliError::Validation(format!("{}: label {bad} outside 1..={k}", path.display())));
    }
    Ok(Labeling::new(*geom, raster.data.iter().map(|&v| usize::from(v) - 1).collect())?)
}

fn labels_raster(labeling: &Labeling) -> Result<Raster> {
    let geom = labeling.geometry();
    if labeling.label_bound() > MAX_LABELS {
        return Err(CliError::Validation(format!("label maps hold at most {MAX_LABELS} labels")));
    }
    Ok(Raster {
        width: geom.width(),
        height: geom.height(),
        channels: 1,
        data: labeling.as_slice().iter().map(|&l| (l + 1) as u8).collect(),
    })
}

fn unit_or_default(e: Option<&[f64]>, channels: usize) -> Result<Vec<f64>> {
    let e = e.map_or_else(|| vec![1.0; channels], <[f64]>::to_vec);
    if e.len() != channels {
        return Err(CliError::Validation(format!("--e has {} components, images have {channels}", e.len())));
    }
    let norm = e.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(CliError::Validation("--e must be a non-zero vector".into()));
    }
    Ok(e.iter().map(|v| v / norm).collect())
}

fn load_table(path: Option<&Path>, e: Option<&[f64]>, channels: usize) -> Result<DistortionTable> {
    let table = match path {
        Some(path) => text::read_table(path, channels, e)?,
        None => DistortionTable::identity(unit_or_default(e, channels)?)?,
    };
    if !table.is_monotone() {
        warn("distortion table is not monotone");
    }
    Ok(table)
}

struct Inputs {
    image: ColorImage,
    mask: DamageMask,
    grey: GreyObservation,
    table: DistortionTable,
}

fn load_inputs(global: &GlobalOptions, args: &InstanceArgs) -> Result<Inputs> {
    let raster = pnm::read(&args.image, 3)?;
    let geom = geometry(global, raster.width, raster.height)?;
    let image = ColorImage::from_u8(geom, 3, &raster.data)?;
    let mask = match &args.mask {
        Some(path) => read_mask(path, &geom)?,
        None => DamageMask::empty(geom),
    };
    let table = load_table(args.table.as_deref(), args.e.as_deref(), 3)?;
    let grey = match &args.grey {
        Some(path) => {
            let g = pnm::read(path, 1)?;
            same_size(path, &g, &geom)?;
            let values = g.data.iter().enumerate().map(|(p, &v)| mask.is_damaged(p).then_some(f64::from(v) / 255.0));
            GreyObservation::new(geom, values.collect())?
        }
        None => {
            let values = (0..geom.pixel_count()).map(|p| mask.is_damaged(p).then(|| table.eval_color(image.pixel(p))));
            GreyObservation::new(geom, values.collect())?
        }
    };
    Ok(Inputs { image, mask, grey, table })
}

fn validated(inputs: Inputs, palette: &Palette, params: ModelParams) -> Result<(Instance, ValidationReport)> {
    let report = validate_instance(&inputs.image, &inputs.mask, &inputs.grey, palette, &params);
    if !report.ok {
        let fatal: Vec<&str> = report.fatal().map(|i| i.message.as_str()).collect();
        return Err(CliError::Validation(fatal.join("; ")));
    }
    for issue in report.warnings() {
        warn(&issue.message);
    }
    let instance = Instance::new(inputs.image, inputs.mask, inputs.grey, inputs.table, params)?;
    Ok((instance, report))
}

#[derive(Debug, Serialize)]
struct RestoreReport<'a> {
    config: &'a RunConfig,
    palette: &'a [Vec<f64>],
    energy: EnergyBreakdown,
    solve_trace: Option<SolveTrace>,
    outer_energies: Vec<f64>,
    step_energies: Vec<f64>,
    merge_events: Vec<MergeEvent>,
    warnings: Vec<String>,
    validation: ValidationReport,
    regularity: RegularityReport,
}

fn restore(config: &RunConfig, args: &RestoreArgs) -> Result<()> {
    let global = &config.global;
    let inputs = load_inputs(global, &args.instance)?;
    let params = params(global)?;
    let solve = args.solver.options(global.seed);

    let (instance, palette, labeling, validation, trace, free) = match (&args.palette, args.k) {
        (Some(path), _) => {
            let palette = text::read_palette(path)?;
            if palette.len() > MAX_LABELS {
                return Err(CliError::Validation(format!("palette has {} colors, at most {MAX_LABELS}", palette.len())));
            }
            let (instance, validation) = validated(inputs, &palette, params)?;
            let (labeling, trace) = solve_fixed_palette(&instance, &palette, &solve)?;
            (instance, palette, labeling, validation, Some(trace), None)
        }
        (None, Some(k)) => {
            if !(1..=MAX_LABELS).contains(&k) {
                return Err(CliError::Validation(format!("--k must be in 1..={MAX_LABELS}")));
            }
            let init = init_palette_kmeans(&inputs.image, &inputs.mask, k, global.seed)?;
            for w in &init.warnings {
                warn(w);
            }
            let (instance, validation) = validated(inputs, &init.palette, params)?;
            let opts = FreePaletteOptions {
                solve,
                seed: global.seed,
                max_outer: args.max_outer,
                outer_tol: FreePaletteOptions::default().outer_tol,
                merge_tol: args.merge_tol,
            };
            let mut result = solve_free_palette_from(&instance, init.palette, &opts)?;
            result.warnings.splice(0..0, init.warnings);
            let palette = result.palette.clone();
            let labeling = result.labeling.clone();
            (instance, palette, labeling, validation, None, Some(result))
        }
        (None, None) => return Err(CliError::Usage("either --palette or --k is required".into())),
    };

    pnm::write(&args.out_image, &image_raster(&palette.render(&labeling)?))?;
    if let Some(path) = &args.out_labels {
        pnm::write(path, &labels_raster(&labeling)?)?;
    }
    if let Some(path) = &args.out_palette {
        write_file(path, text::format_palette(&palette).as_bytes())?;
    }
    if let Some(path) = &args.report {
        let diagnostics = DiagnosticsOptions::default().scaled(global.h);
        let report = RestoreReport {
            config,
            palette: palette.colors(),
            energy: total_energy(&instance, &palette, &labeling)?,
            solve_trace: trace,
            outer_energies: free.as_ref().map(|r| r.outer_energies.clone()).unwrap_or_default(),
            step_energies: free.as_ref().map(|r| r.step_energies.clone()).unwrap_or_default(),
            merge_events: free.as_ref().map(|r| r.merge_events.clone()).unwrap_or_default(),
            warnings: free.map(|r| r.warnings).unwrap_or_default(),
            validation,
            regularity: regularity_report(&labeling, &palette, instance.weights(), &diagnostics)?,
        };
        write_file(path, to_json(&report).as_bytes())?;
    }
    Ok(())
}

fn energy(global: &GlobalOptions, args: &EnergyArgs) -> Result<()> {
    let inputs = load_inputs(global, &args.instance)?;
    let palette = text::read_palette(&args.palette)?;
    let (instance, _) = validated(inputs, &palette, params(global)?)?;
    let labeling = read_labels(&args.labels, instance.geometry(), palette.len())?;
    emit(&total_energy(&instance, &palette, &labeling)?, args.out.as_deref())
}

#[derive(Debug, Serialize)]
struct OracleReport {
    width: usize,
    height: usize,
    /// 1-based, row-major.
    labels: Vec<usize>,
    energy: f64,
}

fn oracle(global: &GlobalOptions, args: &OracleArgs) -> Result<()> {
    let inputs = load_inputs(global, &args.instance)?;
    let palette = text::read_palette(&args.palette)?;
    let (instance, _) = validated(inputs, &palette, params(global)?)?;
    let result = brute_force_fixed_palette(&instance, &palette)?;
    if let Some(path) = &args.out_labels {
        pnm::write(path, &labels_raster(&result.labeling)?)?;
    }
    let geom = instance.geometry();
    let report = OracleReport {
        width: geom.width(),
        height: geom.height(),
        labels: result.labeling.as_slice().iter().map(|l| l + 1).collect(),
        energy: result.energy,
    };
    emit(&report, args.out.as_deref())
}

fn diagnose(global: &GlobalOptions, args: &DiagnoseArgs) -> Result<()> {
    let palette = text::read_palette(&args.palette)?;
    let raster = pnm::read(&args.labels, 1)?;
    let geom = geometry(global, raster.width, raster.height)?;
    let labeling = read_labels(&args.labels, &geom, palette.len())?;
    let opts = DiagnosticsOptions {
        density_radii: args.radii.clone(),
        elimination_radii: args.elimination_radii.clone(),
        etas: args.etas.clone(),
    }
    .scaled(global.h);
    let report = regularity_report(&labeling, &palette, &EdgeWeights::for_geometry(&geom), &opts)?;
    emit(&report, args.out.as_deref())
}

fn fit(args: &FitArgs) -> Result<()> {
    let raster = pnm::read(&args.image, 3)?;
    let geom = GridGeometry::unit(raster.width, raster.height)?;
    let image = ColorImage::from_u8(geom, 3, &raster.data)?;
    let g = pnm::read(&args.grey, 1)?;
    same_size(&args.grey, &g, &geom)?;
    let grey = GreyObservation::new(geom, g.data.iter().map(|&v| Some(f64::from(v) / 255.0)).collect())?;
    let calibration = match &args.calibration {
        Some(path) => read_mask(path, &geom)?.as_slice().to_vec(),
        None => vec![true; geom.pixel_count()],
    };
    let outcome = fit_distortion(&image, &grey, &calibration, args.bins)?;
    for w in &outcome.warnings {
        warn(w);
    }
    write_file(&args.out, text::format_table(&outcome.table).as_bytes())
}

fn synth(global: &GlobalOptions, args: &SynthArgs) -> Result<()> {
    let raster = pnm::read(&args.clean, 3)?;
    let geom = geometry(global, raster.width, raster.height)?;
    let clean = ColorImage::from_u8(geom, 3, &raster.data)?;
    let mask = match &args.mask {
        Some(path) => read_mask(path, &geom)?,
        None => random_blob_mask(geom, args.damage, global.seed)?,
    };
    let table = load_table(args.table.as_deref(), args.e.as_deref(), 3)?;
    let (image, grey) = synthesize_instance(&clean, &mask, &table, args.noise, global.seed)?;
    pnm::write(&args.out_image, &image_raster(&image))?;
    pnm::write(&args.out_mask, &mask_raster(&mask))?;
    if mask.damaged_count() == 0 {
        eprintln!("note: nothing damaged; {} not written", args.out_grey.display());
        return Ok(());
    }
    let data = grey.values().iter().map(|g| (g.unwrap_or(0.0).clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    pnm::write(&args.out_grey, &Raster { width: geom.width(), height: geom.height(), channels: 1, data })
}

fn check_l(args: &CheckLArgs) -> Result<()> {
    let contents = std::fs::read_to_string(&args.table).map_err(|e| CliError::io(&args.table, e))?;
    let file = text::parse_table(&contents).map_err(|m| CliError::parse(&args.table, m))?;
    let channels = file.direction.as_ref().map_or(1, Vec::len);
    let table = text::read_table(&args.table, channels, None)?;
    emit(&nontriviality_check(&table)?, args.out.as_deref())
}
