use std::fmt::Write as _;
use std::path::Path;

use benrec::benford::{analyze_sample, BenfordReport, Verdict};
use benrec::binet::{solve, BenfordVerdict, BinetSolution};
use benrec::decompose::{
    build_lambda_mu, closed_form_convention_check, dominance_check, reduce_depth3, AuxiliaryDecomposition,
    ConventionReport, Depth3Reduction, DominanceReport,
};
use benrec::montecarlo::{self, MonteCarloConfig, MonteCarloReport};
use benrec::presets::Model;
use benrec::recurrence::{SampleMetadata, SequenceSample};
use benrec::{RecurrenceKind, RecurrenceSpec};
use serde::Serialize;

use crate::config::{Command, Format, Resolved, Run};
use crate::CliError;

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    config: &'a Resolved,
    config_hash: &'a str,
    result: T,
}

fn json<T: Serialize>(run: &Run, result: T) -> String {
    let env = Envelope {
        config: &run.resolved,
        config_hash: &run.hash,
        result,
    };
    let mut s = serde_json::to_string_pretty(&env).expect("serializable");
    s.push('\n');
    s
}

/// Comment header for CSV and plot files.
fn header(run: &Run) -> String {
    format!(
        "# config_hash: {}\n# config: {}\n",
        run.hash,
        serde_json::to_string(&run.resolved).expect("serializable")
    )
}

fn write_to(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit(run: &Run, text: &str) -> Result<(), CliError> {
    write_to(run.output.as_deref(), text)
}

fn check_expect(run: &Run, verdict: Verdict) -> Result<(), CliError> {
    match run.resolved.expect {
        Some(want) if want != verdict => Err(CliError::Expectation(format!(
            "verdict {verdict:?} but {want:?} was expected"
        ))),
        _ => Ok(()),
    }
}

fn model(run: &Run) -> Result<&Model, CliError> {
    run.model().ok_or_else(|| CliError::Usage("this command needs a spec, not an input file".into()))
}

fn linear_spec<'a>(run: &'a Run, why: &str) -> Result<&'a RecurrenceSpec, CliError> {
    match model(run)?.as_recurrence() {
        Some(s) if s.kind == RecurrenceKind::Linear => Ok(s),
        _ => Err(CliError::Usage(format!("{why} needs a linear recurrence spec"))),
    }
}

fn analyze(run: &Run, sample: &SequenceSample) -> Result<BenfordReport, CliError> {
    Ok(analyze_sample(sample, run.resolved.weyl_terms, &run.resolved.thresholds)?)
}

fn write_plot(run: &Run, report: &BenfordReport) -> Result<(), CliError> {
    if let Some(p) = &run.plot {
        write_to(Some(p), &format!("{}{}", header(run), report.plot_data()))?;
    }
    Ok(())
}

pub fn dispatch(run: &Run) -> Result<(), CliError> {
    match run.resolved.command {
        Command::Gen => gen(run),
        Command::Analyze => cmd_analyze(run),
        Command::Decompose => decompose(run),
        Command::Predict => predict(run),
        Command::Montecarlo => cmd_montecarlo(run),
    }
}

fn gen(run: &Run) -> Result<(), CliError> {
    let sample = model(run)?.generate()?;
    let text = match run.resolved.format {
        Format::Csv => format!("{}{}", header(run), sample.to_csv()),
        Format::Json => json(run, &sample),
    };
    emit(run, &text)
}

fn cmd_analyze(run: &Run) -> Result<(), CliError> {
    let sample = match (&run.input_text, run.model()) {
        (Some(text), _) => {
            let values = SequenceSample::values_from_csv(text)?;
            let hash = run.resolved.input_hash.clone().unwrap_or_default();
            SequenceSample::from_values(values, SampleMetadata::plain(hash, 0))
        }
        (None, Some(m)) => m.generate()?,
        (None, None) => return Err(CliError::Usage("nothing to analyze".into())),
    };
    let report = analyze(run, &sample)?;
    let text = match run.resolved.format {
        Format::Csv => format!("{}{}", header(run), report.digit_csv()),
        Format::Json => json(run, &report),
    };
    emit(run, &text)?;
    write_plot(run, &report)?;
    check_expect(run, report.verdict)
}

#[derive(Serialize)]
struct Comparison {
    c: f64,
    identities_hold: bool,
    residuals: [f64; 2],
    main_term_verdict: Verdict,
    disagreement: bool,
}

#[derive(Serialize)]
struct Depth2Result<'a> {
    depth: usize,
    decomposition: &'a AuxiliaryDecomposition,
    dominance: &'a DominanceReport,
    main_term_report: &'a BenfordReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<Comparison>,
}

#[derive(Serialize)]
struct Depth3Result<'a> {
    depth: usize,
    reduction: &'a Depth3Reduction,
    convention: &'a ConventionReport,
    main_term_report: &'a BenfordReport,
}

fn dominance_csv(dom: &DominanceReport) -> String {
    let mut out = String::from("n,p,q,gf2,rel_error\n");
    for (k, ((p, q), g)) in dom.p.iter().zip(&dom.q).zip(&dom.gf2).enumerate() {
        let rel = dom.rel_error.get(k).map(|e| format!("{e:?}")).unwrap_or_default();
        let _ = writeln!(out, "{},{p:?},{q:?},{g:?},{rel}", k + 2);
    }
    out
}

fn decompose(run: &Run) -> Result<(), CliError> {
    let spec = linear_spec(run, "decompose")?;
    let seq = spec.generate()?;
    match spec.depth() {
        2 => {
            let dec = build_lambda_mu(spec, run.resolved.c)?;
            let dom = dominance_check(&dec, &seq)?;
            let report = analyze(run, &dec.main_term_sequence()?)?;
            eprintln!(
                "identity residuals: f = λ + μ {:.3e}, g = -λμ {:.3e} (c = {:?})",
                dec.residuals[0], dec.residuals[1], dec.c
            );
            let comparison = match run.resolved.compare_c {
                Some(c2) => {
                    let other = build_lambda_mu(spec, Some(c2))?;
                    let r2 = analyze(run, &other.main_term_sequence()?)?;
                    let disagreement = r2.verdict != report.verdict;
                    if disagreement {
                        eprintln!(
                            "warning: main-term verdicts disagree: c = {:?} gives {:?}, c = {:?} gives {:?}",
                            dec.c, report.verdict, other.c, r2.verdict
                        );
                    }
                    Some(Comparison {
                        c: other.c,
                        identities_hold: other.identities_hold(),
                        residuals: other.residuals,
                        main_term_verdict: r2.verdict,
                        disagreement,
                    })
                }
                None => None,
            };
            if let Some(p) = &run.dominance_csv {
                write_to(Some(p), &format!("{}{}", header(run), dominance_csv(&dom)))?;
            }
            let text = match run.resolved.format {
                Format::Csv => format!("{}{}", header(run), dominance_csv(&dom)),
                Format::Json => json(
                    run,
                    Depth2Result {
                        depth: 2,
                        decomposition: &dec,
                        dominance: &dom,
                        main_term_report: &report,
                        comparison,
                    },
                ),
            };
            emit(run, &text)?;
            write_plot(run, &report)?;
            check_expect(run, report.verdict)
        }
        3 => {
            if run.resolved.c.is_some() || run.resolved.compare_c.is_some() {
                return Err(CliError::Usage("--c and --compare-c apply to depth-2 specs".into()));
            }
            let red = reduce_depth3(spec, None)?;
            let conv = closed_form_convention_check(&red, &seq, 25)?;
            let main = red.closed_form_main_term(conv.best.range, conv.best.prefactor)?;
            let report = analyze(
                run,
                &SequenceSample::from_values(main, SampleMetadata::plain(spec.hash(), spec.trial_seed)),
            )?;
            eprintln!(
                "identity residuals: f1 {:.3e}, f2 {:.3e}, f3 {:.3e}; inner: {:.3e}, {:.3e}",
                red.residuals[0], red.residuals[1], red.residuals[2], red.inner.residuals[0], red.inner.residuals[1]
            );
            let text = match run.resolved.format {
                Format::Csv => {
                    let mut s = header(run);
                    s.push_str("identity,residual\n");
                    for (name, r) in ["f1", "f2", "f3"].iter().zip(red.residuals) {
                        let _ = writeln!(s, "{name},{r:?}");
                    }
                    s
                }
                Format::Json => json(
                    run,
                    Depth3Result {
                        depth: 3,
                        reduction: &red,
                        convention: &conv,
                        main_term_report: &report,
                    },
                ),
            };
            emit(run, &text)?;
            write_plot(run, &report)?;
            check_expect(run, report.verdict)
        }
        d => Err(CliError::Usage(format!("decompose handles depth 2 and 3, got depth {d}"))),
    }
}

#[derive(Serialize)]
struct PredictResult<'a> {
    verdict: &'a BenfordVerdict,
    solution: &'a BinetSolution,
}

fn predict(run: &Run) -> Result<(), CliError> {
    let spec = linear_spec(run, "predict")?;
    if !spec.coeffs.iter().all(|c| c.is_constant()) {
        return Err(CliError::Usage(
            "predict needs constant coefficients (no n, no uniform); use `decompose` for variable coefficients".into(),
        ));
    }
    let coeffs = spec
        .coeffs
        .iter()
        .map(|c| c.eval_at(1, spec.trial_seed))
        .collect::<benrec::Result<Vec<f64>>>()?;
    let sol = solve(&coeffs, &spec.initial)?;
    let verdict = sol.predict_benford();
    let text = match run.resolved.format {
        Format::Csv => {
            let mut s = header(run);
            s.push_str("check,outcome,detail\n");
            for r in &verdict.reasons {
                let _ = writeln!(s, "{},{:?},\"{}\"", r.check, r.outcome, r.detail.replace('"', "'"));
            }
            let _ = writeln!(s, "status,{:?},", verdict.status);
            s
        }
        Format::Json => json(
            run,
            PredictResult {
                verdict: &verdict,
                solution: &sol,
            },
        ),
    };
    emit(run, &text)
}

fn cmd_montecarlo(run: &Run) -> Result<(), CliError> {
    let r = &run.resolved;
    let cfg = MonteCarloConfig {
        mode: r.mode.expect("resolved"),
        trials: r.trials.expect("resolved"),
        seed: r.seed,
        length: r.length.expect("resolved"),
        max_m: r.weyl_terms,
        thresholds: r.thresholds,
    };
    let report: MonteCarloReport = montecarlo::run(model(run)?, &cfg)?;
    let text = match (r.format, &report.report) {
        (Format::Csv, Some(b)) => format!("{}{}", header(run), b.digit_csv()),
        (Format::Csv, None) => {
            let v = report.verdicts.clone().unwrap_or_default();
            format!(
                "{}verdict,count\nconsistent,{}\ninconsistent,{}\ninsufficient_sample,{}\n",
                header(run),
                v.consistent,
                v.inconsistent,
                v.insufficient_sample
            )
        }
        (Format::Json, _) => json(run, &report),
    };
    emit(run, &text)?;
    if let Some(b) = &report.report {
        write_plot(run, b)?;
        check_expect(run, b.verdict)?;
    }
    Ok(())
}
