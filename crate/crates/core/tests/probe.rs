//! Temporary calibration probe; inspects a trained policy against its
//! dataset. Not part of the suite — run by hand, then delete.

use gnm_sim::config::RunConfig;
use gnm_sim::data::context::build_context;
use gnm_sim::data::manifest::load_dataset;
use gnm_sim::data::pairs::{sample_pairs, PairParams, Subset};
use gnm_sim::policy::io::load_policy;
use gnm_sim::policy::net::{scale_obs, scale_stack, scaled_features};
use gnm_sim::sim::sensor::Observation;

#[test]
#[ignore]
fn probe_closed_loop_grid() {
    use gnm_sim::config::GraphConfig;
    use gnm_sim::data::expert::collect_trajectory;
    use gnm_sim::eval::episode::run_episode;
    use gnm_sim::nav::graph::build_graph;
    use gnm_sim::rng::{derive_seed, tag};
    use gnm_sim::sim::world::Difficulty;
    use gnm_sim::sim::worldgen::generate_world;

    let config = RunConfig::preset("default").unwrap();
    let (policy, _) = load_policy(std::path::Path::new("/tmp/cal/train/policy.params")).unwrap();
    let tier = match std::env::var("PROBE_TIER").as_deref() {
        Ok("hard") => Difficulty::Hard,
        Ok("easy") => Difficulty::Easy,
        _ => Difficulty::Moderate,
    };
    let mut worlds = Vec::new();
    for w in 0..8u64 {
        let ws = derive_seed(config.seed, &[tag::EVAL_WORLD, tier.index(), w, 0]);
        let Ok(world) = generate_world(&config.worldgen, tier, ws) else { continue };
        let Ok(traj) = collect_trajectory(
            &world,
            &config.heldout,
            &world.start_pose(),
            world.goal_xy,
            ws,
        ) else {
            continue;
        };
        worlds.push((world, traj));
    }
    println!("{} pilot on {} worlds", tier.label(), worlds.len());
    // Detailed traces for the first world at one operating point.
    {
        let gc = GraphConfig {
            node_spacing_s: 1.0,
            edge_threshold: 3.0,
            subgoal_radius: 2.0,
        };
        let (world, traj) = &worlds[0];
        let graph = build_graph(&policy, traj, tier, &gc).unwrap();
        let max_steps = (config.eval.max_steps_factor * traj.frames.len() as f64) as usize;
        println!(
            "world 0: {} frames, {} nodes, start {:?} goal {:?}",
            traj.frames.len(),
            graph.nodes.len(),
            (world.start_xy.0, world.start_xy.1),
            world.goal_xy
        );
        for e in 0..3u64 {
            let seed = derive_seed(config.seed, &[tag::EPISODE, tier.index(), e]);
            let path = std::env::temp_dir().join(format!("pilot_trace_{e}.csv"));
            let r = run_episode(
                world,
                &config.heldout,
                &policy,
                &graph,
                &gc,
                max_steps,
                None,
                seed,
                Some(&path),
            )
            .unwrap();
            let text = std::fs::read_to_string(&path).unwrap();
            let rows: Vec<&str> = text.lines().skip(1).collect();
            let parse = |row: &str| -> Vec<f64> {
                row.split(',').map(|v| v.parse().unwrap()).collect()
            };
            if rows.is_empty() {
                println!("  ep{e}: unreachable at start (progress {:.3})", r.progress);
                continue;
            }
            let subgoals: Vec<usize> = rows.iter().map(|r| parse(r)[4] as usize).collect();
            let max_sg = subgoals.iter().max().copied().unwrap_or(0);
            let last = parse(rows.last().unwrap());
            println!(
                "  ep{e}: steps {} collided {} progress {:.3} first-sg {} final-sg {max_sg} last ({:.1},{:.1})",
                r.steps,
                r.collision,
                r.progress,
                subgoals.first().unwrap(),
                last[1],
                last[2]
            );
        }
    }
    for threshold in [3.0, 5.0, 8.0] {
        for radius in [2.0, 4.0] {
            let gc = GraphConfig {
                node_spacing_s: 1.0,
                edge_threshold: threshold,
                subgoal_radius: radius,
            };
            let mut progress = 0.0;
            let mut reached = 0;
            let mut collided = 0;
            let mut n = 0;
            let mut wormholes = 0usize;
            let mut edges = 0usize;
            for (world, traj) in &worlds {
                let graph = build_graph(&policy, traj, tier, &gc).unwrap();
                let spacing = (1.0 / config.heldout.dt()).round().max(1.0) as i64;
                for e in &graph.edges {
                    edges += 1;
                    if (e.from as i64 - e.to as i64).abs() as f64 * 1.0 > 5.0 {
                        wormholes += 1;
                    }
                }
                let _ = spacing;
                let max_steps = (config.eval.max_steps_factor * traj.frames.len() as f64) as usize;
                for e in 0..5u64 {
                    let seed = derive_seed(config.seed, &[tag::EPISODE, tier.index(), e]);
                    let r = run_episode(
                        world,
                        &config.heldout,
                        &policy,
                        &graph,
                        &gc,
                        max_steps,
                        None,
                        seed,
                        None,
                    )
                    .unwrap();
                    progress += r.progress;
                    reached += r.reached as usize;
                    collided += r.collision as usize;
                    n += 1;
                }
            }
            println!(
                "  T={threshold:<4} R={radius:<4} progress {:.3}  reached {reached:>2}/{n}  collided {collided:>2}  wormhole edges {wormholes}/{edges}",
                progress / n as f64,
            );
        }
    }
}

#[test]
#[ignore]
fn probe_distance_head() {
    let config = RunConfig::preset("default").unwrap();
    let (_, pools) = load_dataset(std::path::Path::new("/tmp/cal/dataset"), config.roster.len())
        .unwrap();
    let (policy, _) = load_policy(std::path::Path::new("/tmp/cal/train/policy.params")).unwrap();
    let pairs = sample_pairs(
        &pools,
        &config.roster,
        Subset::First(config.roster.len()),
        &PairParams::from_dataset(&config.dataset),
        config.policy.action_variant,
        config.policy.context_variant,
        config.seed,
    )
    .unwrap();

    // Bucket predicted distance by true label.
    let edges = [0.0, 2.0, 5.0, 10.0, 20.0, 29.9, 30.1];
    let mut sums = vec![(0.0f64, 0.0f64, 0usize); edges.len() - 1];
    let mut action_err = 0.0;
    let mut action_n = 0usize;
    for p in &pairs {
        let (ctx, obs, goal) = scaled_features(p);
        let pred = policy.predict(&ctx, &obs, &goal).unwrap();
        for b in 0..edges.len() - 1 {
            if p.distance >= edges[b] && p.distance < edges[b + 1] {
                sums[b].0 += pred.distance;
                sums[b].1 += (pred.distance - p.distance).abs();
                sums[b].2 += 1;
            }
        }
        if !p.is_negative {
            for (w, lw) in pred.waypoints.iter().zip(&p.action) {
                action_err += (w.x - lw.x).hypot(w.y - lw.y);
                action_n += 1;
            }
        }
    }
    println!("true-dist bucket -> mean pred, MAE, n");
    for b in 0..sums.len() {
        let (s, mae, n) = sums[b];
        if n > 0 {
            println!(
                "  [{:>5.1},{:>5.1}): pred {:6.2}  mae {:6.2}  n {}",
                edges[b],
                edges[b + 1],
                s / n as f64,
                mae / n as f64,
                n
            );
        }
    }
    println!(
        "positive action waypoint error: {:.4} (n={})",
        action_err / action_n as f64,
        action_n
    );

    // Held-out deployment view: pairwise node predictions on fresh worlds
    // traversed by the held-out embodiment, bucketed by true gap in seconds.
    use gnm_sim::data::expert::collect_trajectory;
    use gnm_sim::rng::{derive_seed, tag};
    use gnm_sim::sim::world::Difficulty;
    use gnm_sim::sim::worldgen::generate_world;

    for tier in [Difficulty::Moderate, Difficulty::Hard] {
        let mut by_gap: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
        for w in 0..6u64 {
            let ws = derive_seed(config.seed, &[tag::EVAL_WORLD, tier.index(), w, 0]);
            let Ok(world) = generate_world(&config.worldgen, tier, ws) else { continue };
            let Ok(traj) = collect_trajectory(
                &world,
                &config.heldout,
                &world.start_pose(),
                world.goal_xy,
                ws,
            ) else {
                continue;
            };
            let obs_refs: Vec<&Observation> = traj.frames.iter().map(|f| &f.obs).collect();
            let spacing = (1.0 / config.heldout.dt()).round() as usize;
            let idx: Vec<usize> = (0..traj.frames.len()).step_by(spacing).collect();
            for (a, &i) in idx.iter().enumerate() {
                let ctx = build_context(
                    &obs_refs,
                    i,
                    config.policy.context_variant,
                    config.dataset.context_k,
                );
                let cs = scale_stack(&ctx.obs_stack);
                let os = scale_obs(&traj.frames[i].obs);
                for (b, &j) in idx.iter().enumerate() {
                    if a == b {
                        continue;
                    }
                    let pred = policy
                        .predict(&cs, &os, &scale_obs(&traj.frames[j].obs))
                        .unwrap();
                    let gap = a.abs_diff(b);
                    by_gap.entry(gap.min(12)).or_default().push(pred.distance);
                }
            }
        }
        println!("heldout {} worlds, predicted distance by true gap (s):", tier.label());
        for (gap, mut v) in by_gap {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let q = |p: f64| v[((v.len() - 1) as f64 * p) as usize];
            println!(
                "  gap {:>3}{} n {:>5}  p10 {:5.2}  p50 {:5.2}  p90 {:5.2}",
                gap,
                if gap == 12 { "+" } else { " " },
                v.len(),
                q(0.1),
                q(0.5),
                q(0.9)
            );
        }
    }
}
