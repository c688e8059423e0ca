use super::InterventionError;
use crate::analytics::SlotHistogram;
use crate::model::ProcessModel;
use crate::sim::EventLog;
use crate::time::{Seconds, Slot, Timestamp, WEEK};

pub fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

fn mean<T: Copy + Into<f64>>(xs: &[T]) -> Result<f64, InterventionError> {
    if xs.is_empty() {
        return Err(InterventionError::EmptyInput);
    }
    Ok(xs.iter().map(|&x| x.into()).sum::<f64>() / xs.len() as f64)
}

/// `round(lambda * mean(sizes))`, rounding half up, clamped to `[min, max]`.
pub fn scale_size_threshold(sizes: &[usize], lambda: f64, min: u32, max: u32) -> Result<u32, InterventionError> {
    let sizes: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
    let v = round_half_up(lambda * mean(&sizes)?);
    Ok(v.clamp(min as i64, max as i64) as u32)
}

/// `lambda` times the mean of the per-batch longest waits, in whole seconds.
pub fn compute_wt_first_threshold(per_batch_max_waits: &[Seconds], lambda: f64) -> Result<Seconds, InterventionError> {
    let w: Vec<f64> = per_batch_max_waits.iter().map(|&x| x as f64).collect();
    Ok(round_half_up(lambda * mean(&w)?).max(0))
}

/// `lambda` times the mean of the per-batch shortest waits, in whole seconds.
pub fn compute_wt_last_threshold(per_batch_min_waits: &[Seconds], lambda: f64) -> Result<Seconds, InterventionError> {
    compute_wt_first_threshold(per_batch_min_waits, lambda)
}

/// The `top_k` heaviest buckets, ties by (weekday, hour) ascending.
pub fn build_schedule_set(histogram: &SlotHistogram, top_k: usize) -> Result<Vec<Slot>, InterventionError> {
    if histogram.total() == 0 {
        return Err(InterventionError::EmptyHistogram);
    }
    Ok(histogram.top_k(top_k).into_iter().map(|(s, _)| s).collect())
}

/// Per batch of `activity`, the waits its first and last member would have
/// had if the batch had started at the earliest instant, at or after the
/// batch became ready, from which an eligible resource stays open long enough
/// for the mean batch work. Searches four weeks ahead.
pub fn window_aligned_waits(
    log: &EventLog,
    model: &ProcessModel,
    activity: &str,
) -> Result<(Vec<Seconds>, Vec<Seconds>), InterventionError> {
    window_aligned_waits_within(log, model, activity, 4 * WEEK)
}

pub(crate) fn window_aligned_waits_within(
    log: &EventLog,
    model: &ProcessModel,
    activity: &str,
    horizon: Seconds,
) -> Result<(Vec<Seconds>, Vec<Seconds>), InterventionError> {
    let batches: Vec<_> = log.batches_of(activity).collect();
    if batches.is_empty() {
        return Err(InterventionError::NoBatches(activity.to_string()));
    }
    let est = (batches.iter().map(|b| log.batch_work(b) as f64).sum::<f64>() / batches.len() as f64).ceil() as Seconds;
    let resources = model.eligible_resources(activity);
    let mut first = Vec::with_capacity(batches.len());
    let mut last = Vec::with_capacity(batches.len());
    for b in batches {
        let ready = b.ready_time;
        let mut best: Option<Timestamp> = None;
        for r in &resources {
            for (s, e) in r.calendar.windows_from(ready) {
                if s > ready + horizon {
                    break;
                }
                let from = s.max(ready);
                if e - from >= est {
                    best = Some(best.map_or(from, |x| x.min(from)));
                    break;
                }
            }
        }
        let w = best.ok_or_else(|| InterventionError::NoFittingWindow(activity.to_string()))?;
        let enables = b.members.iter().map(|&m| log.records[m].enable_time);
        let e_first = enables.clone().min().expect("non-empty batch");
        let e_last = enables.max().expect("non-empty batch");
        first.push((w - e_first).max(0));
        last.push((w - e_last).max(0));
    }
    Ok((first, last))
}

/// `(lambda * mean first-member aligned wait, lambda * mean last-member aligned wait)`.
pub fn compute_window_aligned_thresholds(
    log: &EventLog,
    model: &ProcessModel,
    activity: &str,
    lambda: f64,
) -> Result<(Seconds, Seconds), InterventionError> {
    let (first, last) = window_aligned_waits(log, model, activity)?;
    Ok((compute_wt_first_threshold(&first, lambda)?, compute_wt_last_threshold(&last, lambda)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::single_activity_model;
    use crate::model::{Calendar, CalendarInterval};
    use crate::policy::BatchType;
    use crate::sim::{BatchRecord, InstanceRecord};
    use crate::time::{Weekday, DAY, HOUR};

    #[test]
    fn size_scaling() {
        assert_eq!(scale_size_threshold(&[2, 4, 6], 1.0, 1, 50).unwrap(), 4);
        assert_eq!(scale_size_threshold(&[2, 4, 6], 0.5, 1, 50).unwrap(), 2);
        // round(1.2) = 1, and 1 is the lower clamp.
        assert_eq!(scale_size_threshold(&[3], 0.4, 1, 50).unwrap(), 1);
        assert_eq!(scale_size_threshold(&[3], 0.1, 1, 50).unwrap(), 1);
        assert_eq!(scale_size_threshold(&[3], 0.5, 1, 50).unwrap(), 2);
        assert_eq!(scale_size_threshold(&[40], 2.0, 1, 50).unwrap(), 50);
        assert!(scale_size_threshold(&[], 1.0, 1, 50).is_err());
    }

    #[test]
    fn wait_thresholds() {
        assert_eq!(compute_wt_first_threshold(&[10 * HOUR], 0.9).unwrap(), 9 * HOUR);
        assert_eq!(compute_wt_first_threshold(&[4 * HOUR, 6 * HOUR], 1.0).unwrap(), 5 * HOUR);
        assert_eq!(compute_wt_first_threshold(&[4 * HOUR, 6 * HOUR], 0.5).unwrap(), 5 * HOUR / 2);
        assert_eq!(compute_wt_last_threshold(&[2 * HOUR], 1.0).unwrap(), 2 * HOUR);
        assert_eq!(compute_wt_last_threshold(&[HOUR, 3 * HOUR], 0.5).unwrap(), HOUR);
        assert_eq!(compute_wt_last_threshold(&[0, 0], 1.7).unwrap(), 0);
        assert!(compute_wt_first_threshold(&[], 1.0).is_err());
    }

    #[test]
    fn schedule_sets() {
        let mon8 = Slot::new(Weekday::Mon, 8);
        let tue9 = Slot::new(Weekday::Tue, 9);
        let h = SlotHistogram::from_pairs([(mon8, 10), (tue9, 2)]);
        assert_eq!(build_schedule_set(&h, 1).unwrap(), vec![mon8]);
        let tie = SlotHistogram::from_pairs([(tue9, 4), (mon8, 4)]);
        assert_eq!(build_schedule_set(&tie, 1).unwrap(), vec![mon8]);
        let three = SlotHistogram::from_pairs([(tue9, 4), (mon8, 4), (Slot::new(Weekday::Sun, 23), 1)]);
        assert_eq!(build_schedule_set(&three, 5).unwrap().len(), 3);
        assert!(build_schedule_set(&SlotHistogram::default(), 3).is_err());
    }

    /// One batch of two members enabled at `enables`, ready at `ready`,
    /// with `work` seconds of processing.
    fn batch_log(ready: i64, enables: [i64; 2], work: i64) -> EventLog {
        let rec = |i: u32, e: i64| InstanceRecord {
            case_id: i,
            activity: "A".into(),
            resource: "r1".into(),
            enable_time: e,
            start_time: ready,
            end_time: ready + work,
            batch_id: 0,
            cost: 0.0,
            work,
        };
        EventLog {
            records: vec![rec(0, enables[0]), rec(1, enables[1])],
            batches: vec![BatchRecord {
                batch_id: 0,
                activity: "A".into(),
                resource: "r1".into(),
                batch_type: BatchType::Parallel,
                ready_time: ready,
                start_time: ready,
                end_time: ready + work,
                cost: 0.0,
                members: vec![0, 1],
            }],
        }
    }

    fn model_with(cal: Calendar) -> ProcessModel {
        let mut m = single_activity_model(2);
        m.resources[0].calendar = cal;
        m
    }

    #[test]
    fn ready_at_window_start_keeps_waits() {
        let m = model_with(Calendar::daily(&[Weekday::Tue], 8 * HOUR, 16 * HOUR));
        let ready = DAY + 8 * HOUR;
        let log = batch_log(ready, [ready - 6 * HOUR, ready - HOUR], 3 * HOUR);
        let (f, l) = window_aligned_waits(&log, &m, "A").unwrap();
        assert_eq!((f, l), (vec![6 * HOUR], vec![HOUR]));
        let th = compute_window_aligned_thresholds(&log, &m, "A", 0.5).unwrap();
        assert_eq!(th, (3 * HOUR, HOUR / 2));
    }

    #[test]
    fn ready_two_hours_before_window() {
        let m = model_with(Calendar::daily(&[Weekday::Tue], 8 * HOUR, 16 * HOUR));
        let ready = DAY + 6 * HOUR;
        let log = batch_log(ready, [ready - 6 * HOUR, ready - HOUR], 3 * HOUR);
        assert_eq!(compute_window_aligned_thresholds(&log, &m, "A", 1.0).unwrap(), (8 * HOUR, 3 * HOUR));
    }

    #[test]
    fn short_window_skipped() {
        let cal = Calendar::new(vec![
            CalendarInterval { day: Weekday::Tue, start: 8 * HOUR, end: 9 * HOUR },
            CalendarInterval { day: Weekday::Tue, start: 10 * HOUR, end: 16 * HOUR },
        ]);
        let m = model_with(cal);
        let ready = DAY + 7 * HOUR;
        let log = batch_log(ready, [ready, ready], 3 * HOUR);
        let (f, _) = window_aligned_waits(&log, &m, "A").unwrap();
        assert_eq!(f, vec![3 * HOUR]);
    }

    #[test]
    fn no_window_is_an_error() {
        let m = model_with(Calendar::daily(&[Weekday::Tue], 8 * HOUR, 9 * HOUR));
        let log = batch_log(0, [0, 0], 3 * HOUR);
        match window_aligned_waits(&log, &m, "A") {
            Err(InterventionError::NoFittingWindow(a)) => assert_eq!(a, "A"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
