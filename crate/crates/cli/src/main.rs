use clap::{Args, Parser, Subcommand};
use std::process::ExitCode;
use theta_char::character::{
    default_n_max, standard_classes, stable_class_sum, twisted_character_value, Mode, PipelineOptions,
};
use theta_char::classes::{norm_map, working_precision, ClassKind, ThetaClass};
use theta_char::localfield::{CharDescriptor, PrimeContext};
use theta_char::quadforms::{canonical_form, FormShapeId};
use theta_char::suite::{class_label, fmt_scalar, verify_lemmas};
use theta_char::volumes::{char_profile, vol_profile, EnumOptions, Enumerator, Profile};
use theta_char::{Error, Rational};

#[derive(Parser, Debug)]
#[command(name = "theta-char", version, about = "Exact twisted character values of GL(4) theta-classes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Odd prime `p`.
    #[arg(long)]
    prime: Option<u64>,
    /// Largest shell index enumerated.
    #[arg(long)]
    nmax: Option<u32>,
    /// Emit JSON instead of a table.
    #[arg(long)]
    json: bool,
    /// Worker threads for shell enumeration.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Shell enumerator: hensel, pruned or flat.
    #[arg(long, default_value = "hensel")]
    enumerator: Enumerator,
}

impl Common {
    fn p(&self) -> u64 {
        self.prime.unwrap_or(3)
    }

    fn enum_options(&self) -> EnumOptions {
        EnumOptions { method: self.enumerator, threads: self.threads.max(1) }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check every enumerated quantity and class value against its closed form.
    VerifyLemmas {
        #[command(flatten)]
        common: Common,
    },
    /// Twisted character value of one class.
    Char {
        #[command(flatten)]
        common: Common,
        /// Class descriptor as JSON.
        #[arg(long)]
        class: String,
        /// Override the twisting character `Y` (u, pi or upi).
        #[arg(long = "Y")]
        y: Option<String>,
        /// oracle or closed-form.
        #[arg(long, default_value = "oracle")]
        mode: Mode,
    },
    /// Shell volume or character sum profile of a catalog shape.
    Volumes {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        shape: FormShapeId,
        /// Weight shells by `chi_Y` of the value.
        #[arg(long = "Y")]
        y: Option<String>,
    },
    /// Image of a type II or IV class in the endoscopic group.
    Norm {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        class: String,
    },
    /// Every standard class at one prime.
    ReportAll {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "oracle")]
        mode: Mode,
    },
}

struct Failure {
    identity: String,
    error: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { identity: "input".into(), error: e.to_string() }
    }
}

fn load_class(json: &str, common: &Common, y: Option<&str>) -> Result<ThetaClass, Failure> {
    let mut cls = ThetaClass::from_json(json)?;
    if let Some(p) = common.prime.filter(|p| *p != cls.p) {
        return Err(Error::Parse(format!("--prime {p} disagrees with class prime {}", cls.p)).into());
    }
    if let Some(y) = y {
        cls.y = CharDescriptor::new(y.parse()?)?;
    }
    cls.validate()?;
    Ok(cls)
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json"));
}

fn run(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::VerifyLemmas { common } => {
            let n_max = common.nmax.unwrap_or_else(|| default_n_max(common.p()).max(3));
            let opts = PipelineOptions { enumeration: common.enum_options(), ..Default::default() };
            let report = verify_lemmas(common.p(), n_max, &opts)?;
            if common.json {
                print_json(&report.to_json_value());
            } else {
                print!("{}", report.to_table());
            }
            if let Some(f) = report.first_failure() {
                return Err(Failure { identity: f.name.clone(), error: format!("expected {}, got {}", f.expected, f.actual) });
            }
            Ok(true)
        }
        Command::Char { common, class, y, mode } => {
            let cls = load_class(&class, &common, y.as_deref())?;
            let opts = PipelineOptions { mode, enumeration: common.enum_options(), n_max: common.nmax };
            let rep = twisted_character_value::<Rational>(&cls, &opts)?;
            if common.json {
                print_json(&rep.to_json_value());
            } else {
                println!("class       {}", class_label(&cls));
                println!("content     pi^{} (unit legendre {})", rep.content_valuation, rep.content_unit_legendre);
                let entries: Vec<String> = rep.profile.entries.iter().map(fmt_scalar).collect();
                println!("profile     [{}]", entries.join(", "));
                println!("series(0)   {}", fmt_scalar(&rep.series_value));
                println!("prefactor   {}", rep.prefactor);
                println!("T0          {}", rep.normalization);
                println!("value       {}", rep.value.value);
                println!("expected    {}", rep.expected.value);
                println!("delta       {}", rep.value.y_matches_e3 as u8);
                println!("kappa       {}", rep.value.twist_sign);
            }
            if !rep.matches_expected() {
                return Err(Failure {
                    identity: format!("value[{}]", class_label(&cls)),
                    error: format!("expected {}, got {}", rep.expected.value, rep.value.value),
                });
            }
            Ok(true)
        }
        Command::Volumes { common, shape, y } => {
            let ctx = PrimeContext::new(common.p())?;
            let n_max = common.nmax.unwrap_or_else(|| default_n_max(common.p()));
            let form = canonical_form(shape, &ctx, n_max + 2)?;
            let profile: Profile<Rational> = match y {
                Some(y) => {
                    let y = CharDescriptor::new(y.parse()?)?;
                    char_profile(&form, &y, n_max, &ctx, common.enum_options())?
                }
                None => vol_profile(&form, n_max, common.enum_options())?,
            };
            if common.json {
                print_json(&profile.to_json_value());
            } else {
                println!("{shape} at p = {}", common.p());
                for (n, e) in profile.entries.iter().enumerate() {
                    println!("{n:>3}  {}", fmt_scalar(e));
                }
            }
            Ok(true)
        }
        Command::Norm { common, class } => {
            let cls = load_class(&class, &common, None)?;
            if !matches!(cls.kind, ClassKind::II | ClassKind::IV) {
                return Err(Error::WrongKind(cls.kind.to_string()).into());
            }
            let image = norm_map(&cls, working_precision(cls.p))?;
            let v = image.to_json_value();
            if common.json {
                print_json(&v);
            } else {
                println!("class       {}", class_label(&cls));
                println!("consistent  {}", image.is_consistent());
                println!("{}", serde_json::to_string_pretty(&v).expect("json"));
            }
            if !image.is_consistent() {
                return Err(Failure { identity: format!("norm[{}]", class_label(&cls)), error: "inconsistent image".into() });
            }
            Ok(true)
        }
        Command::ReportAll { common, mode } => {
            let opts = PipelineOptions { mode, enumeration: common.enum_options(), n_max: common.nmax };
            let mut rows = Vec::new();
            let mut first_bad: Option<Failure> = None;
            for cls in standard_classes(common.p())? {
                let label = class_label(&cls);
                let (value, expected, pass) = match twisted_character_value::<Rational>(&cls, &opts) {
                    Ok(r) => (r.value.value.to_string(), r.expected.value.to_string(), r.matches_expected()),
                    Err(e) => (format!("error: {e}"), String::new(), false),
                };
                if !pass && first_bad.is_none() {
                    first_bad = Some(Failure { identity: format!("value[{label}]"), error: format!("expected {expected}, got {value}") });
                }
                rows.push((label, value, expected, pass));
            }
            let mut sums = Vec::new();
            for cls in standard_classes(common.p())? {
                if !matches!(cls.kind, ClassKind::II | ClassKind::IV) || Some(cls.r) != cls.r_twists().ok().map(|t| t[0]) {
                    continue;
                }
                let s = stable_class_sum::<Rational>(&cls, &opts).map(|(_, s)| fmt_scalar(&s));
                let label = class_label(&cls);
                let pass = matches!(&s, Ok(v) if v == "0");
                if !pass && first_bad.is_none() {
                    first_bad = Some(Failure { identity: format!("stable-sum[{label}]"), error: format!("{s:?}") });
                }
                sums.push((label, s.unwrap_or_else(|e| format!("error: {e}")), pass));
            }
            if common.json {
                let rows_json: Vec<_> = rows
                    .iter()
                    .map(|(l, v, e, p)| serde_json::json!({"class": l, "value": v, "expected": e, "pass": p}))
                    .collect();
                let sums_json: Vec<_> =
                    sums.iter().map(|(l, s, p)| serde_json::json!({"class": l, "stable_sum": s, "pass": p})).collect();
                print_json(&serde_json::json!({"p": common.p(), "mode": mode, "values": rows_json, "stable_sums": sums_json}));
            } else {
                for (l, v, e, p) in &rows {
                    println!("{}  {l:<44} {v:>10}  (expected {e})", if *p { "PASS" } else { "FAIL" });
                }
                for (l, s, p) in &sums {
                    println!("{}  stable sum {l:<33} {s:>10}", if *p { "PASS" } else { "FAIL" });
                }
            }
            match first_bad {
                Some(f) => Err(f),
                None => Ok(true),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(_) => ExitCode::SUCCESS,
        Err(f) => {
            let record = serde_json::json!({"status": "fail", "identity": f.identity, "error": f.error});
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}
