use super::{AdError, Arith, Bound, ParamStore, Tape, Var};

#[derive(Debug, Clone, Copy)]
pub struct GradCheckOptions {
    /// Central-difference step.
    pub epsilon: f64,
    /// Pass threshold on the maximum relative error.
    pub tolerance: f64,
    /// Denominator floor for relative errors, so gradients that are zero up
    /// to roundoff do not register as large relative discrepancies.
    pub scale_floor: f64,
    /// Negative-control hook: perturbs the first analytic gradient.
    #[doc(hidden)]
    pub corrupt_first: bool,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            epsilon: 1e-5,
            tolerance: 1e-4,
            scale_floor: 1e-6,
            corrupt_first: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckEntry {
    pub tensor: String,
    pub offset: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub entries: Vec<GradCheckEntry>,
    /// Infinite if any entry was non-finite.
    pub max_rel_error: f64,
    pub worst: Option<usize>,
    pub tolerance: f64,
    pub passed: bool,
}

impl GradCheckReport {
    pub fn worst_entry(&self) -> Option<&GradCheckEntry> {
        self.worst.map(|i| &self.entries[i])
    }
}

fn relative_error(a: f64, n: f64, floor: f64) -> f64 {
    if !a.is_finite() || !n.is_finite() {
        return f64::INFINITY;
    }
    let diff = (a - n).abs();
    if diff == 0.0 {
        return 0.0;
    }
    diff / a.abs().max(n.abs()).max(floor)
}

fn evaluate<F>(f: &F, params: &ParamStore, tape: &mut Tape) -> f64
where
    F: Fn(&mut Tape, &Bound<Var>) -> Var,
{
    tape.reset();
    let bound = tape.bind(params);
    let out = f(tape, &bound);
    tape.value(out)
}

/// Compares reverse-mode gradients of `f` against central finite
/// differences `(f(θ+ε) − f(θ−ε)) / 2ε`, one scalar parameter at a time.
///
/// Non-finite values are reported in the entries and fail the check;
/// only a domain error during the analytic pass is returned as `Err`.
pub fn check_gradients<F>(
    f: F,
    params: &ParamStore,
    opts: &GradCheckOptions,
) -> Result<GradCheckReport, AdError>
where
    F: Fn(&mut Tape, &Bound<Var>) -> Var,
{
    let mut tape = Tape::new();
    let bound = tape.bind(params);
    let out = f(&mut tape, &bound);
    tape.set_output(out);
    tape.backward()?;
    let mut analytic: Vec<f64> = tape.param_gradients(&bound).into_iter().flatten().collect();
    if opts.corrupt_first {
        if let Some(g) = analytic.first_mut() {
            *g += 1e-2 * (1.0 + g.abs());
        }
    }

    let mut probe = params.clone();
    let mut entries = Vec::with_capacity(analytic.len());
    for (i, &a) in analytic.iter().enumerate() {
        let theta = params.get_flat(i);
        probe.set_flat(i, theta + opts.epsilon);
        let up = evaluate(&f, &probe, &mut tape);
        probe.set_flat(i, theta - opts.epsilon);
        let down = evaluate(&f, &probe, &mut tape);
        probe.set_flat(i, theta);

        let numeric = (up - down) / (2.0 * opts.epsilon);
        let (name, offset) = params.locate_flat(i).expect("index in range");
        entries.push(GradCheckEntry {
            tensor: name.to_owned(),
            offset,
            analytic: a,
            numeric,
            rel_error: relative_error(a, numeric, opts.scale_floor),
        });
    }

    let worst = entries
        .iter()
        .enumerate()
        .max_by(|(_, x), (_, y)| x.rel_error.total_cmp(&y.rel_error))
        .map(|(i, _)| i);
    let max_rel_error = worst.map_or(0.0, |i| entries[i].rel_error);
    Ok(GradCheckReport {
        passed: max_rel_error < opts.tolerance,
        entries,
        max_rel_error,
        worst,
        tolerance: opts.tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_in_three_params() {
        let mut store = ParamStore::new();
        let id = store.add("theta", vec![3], vec![0.7, -1.3, 2.1]);
        let report = check_gradients(
            |t, p| {
                let th = p.get(id);
                let sq = t.dot(th, th);
                let c = t.constant(3.0);
                let cross = t.mul(th[0], th[1]);
                let lin = t.mul(c, th[2]);
                let s = t.sum(&[sq, cross, lin]);
                t.scale(s, 0.5)
            },
            &store,
            &GradCheckOptions::default(),
        )
        .unwrap();
        assert!(report.max_rel_error < 1e-6, "{}", report.max_rel_error);
        assert!(report.passed);
    }

    #[test]
    fn constant_function_has_zero_error() {
        let mut store = ParamStore::new();
        store.add("theta", vec![2], vec![1.0, 2.0]);
        let report =
            check_gradients(|t, _| t.constant(4.0), &store, &GradCheckOptions::default()).unwrap();
        assert!(report.entries.iter().all(|e| e.analytic == 0.0 && e.rel_error == 0.0));
        assert_eq!(report.max_rel_error, 0.0);
    }

    #[test]
    fn corrupted_gradient_fails() {
        let mut store = ParamStore::new();
        let id = store.add("theta", vec![1], vec![1.5]);
        let opts = GradCheckOptions {
            corrupt_first: true,
            ..Default::default()
        };
        let report = check_gradients(|t, p| t.exp(p.get(id)[0]), &store, &opts).unwrap();
        assert!(!report.passed);
        assert_eq!(report.worst_entry().unwrap().tensor, "theta");
    }

    #[test]
    fn non_finite_values_are_reported_not_raised() {
        let mut store = ParamStore::new();
        let id = store.add("theta", vec![1], vec![800.0]);
        let report = check_gradients(
            |t, p| t.exp(p.get(id)[0]),
            &store,
            &GradCheckOptions::default(),
        )
        .unwrap();
        assert!(report.max_rel_error.is_infinite());
        assert!(!report.passed);
    }
}
