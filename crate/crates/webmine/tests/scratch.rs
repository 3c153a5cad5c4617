//! Temporary diagnostic: which patterns does ssra lose, and why?

use webmine::clf::group_by_user;
use webmine::eval::session_accuracy;
use webmine::miner::{sequential_apriori, support, MiningParams};
use webmine::reconstruct::{reconstruct_all, Heuristic, ReconstructionParams};
use webmine::session::Session;
use webmine::simulator::{simulate, SimulationParams};
use webmine::topology::{generate_random_topology, TopologyGenParams};

#[test]
#[ignore]
fn why_ssra_loses_patterns() {
    let topology = generate_random_topology(&TopologyGenParams {
        n_pages: 300,
        avg_outdegree: 15.0,
        entry_fraction: 0.05,
        seed: 21,
    })
    .unwrap();
    let params = SimulationParams {
        stp: 0.10,
        lpp: 0.40,
        nip: 0.40,
        n_agents: 10_000,
        seed: 121,
        ..Default::default()
    };
    let (real, log) = simulate(&topology, &params).unwrap();
    let streams = group_by_user(log.entries);
    let real_sessions: Vec<Session> = real.iter().map(|r| r.to_session()).collect();

    let recon = reconstruct_all(
        &streams,
        &topology,
        &ReconstructionParams {
            heuristic: Heuristic::SmartSra,
            page_stay_rho_secs: 600,
            session_delta_secs: 3600,
        },
    );
    println!(
        "real {} ssra {} sa {:.4}",
        real.len(),
        recon.len(),
        session_accuracy(&real, &recon).unwrap()
    );

    for min_support in [0.001, 0.0015, 0.002] {
        let mining = MiningParams {
            min_support,
            ..Default::default()
        };
        let truth =
            sequential_apriori(&mining, &real_sessions, &topology, topology.pages()).unwrap();
        let found = sequential_apriori(&mining, &recon, &topology, topology.pages()).unwrap();
        let found_set: std::collections::BTreeSet<Vec<String>> = found
            .iter()
            .map(|p| p.pages.iter().map(|q| q.to_string()).collect())
            .collect();
        println!("ms {min_support}: |MP_A| {} |MP_H| {}", truth.len(), found.len());
        for pat in &truth {
            let key: Vec<String> = pat.pages.iter().map(|q| q.to_string()).collect();
            if !found_set.contains(&key) {
                // why: support in ssra mining? or kill-flip?
                let sup_ssra = support(&pat.pages, &recon).unwrap();
                // check one-page extensions' supports in both minings
                let mut extension_info = String::new();
                if let Some(last) = pat.pages.last() {
                    if let Some(last_idx) = topology.index_of(last) {
                        for &succ in topology.successors_idx(last_idx) {
                            let succ_page = topology.page(succ).clone();
                            let mut ext = pat.pages.clone();
                            ext.push(succ_page.clone());
                            let se = support(&ext, &recon).unwrap();
                            if se >= min_support {
                                extension_info.push_str(&format!(
                                    " ext+{succ_page}:ssra={se:.5}(real={:.5})",
                                    support(&ext, &real_sessions).unwrap()
                                ));
                            }
                        }
                    }
                }
                // prefix-extension (prepend) check
                let mut prepend_info = String::new();
                for q in topology.pages() {
                    if topology.linked(q, &pat.pages[0]) {
                        let mut ext = vec![q.clone()];
                        ext.extend(pat.pages.iter().cloned());
                        let se = support(&ext, &recon).unwrap();
                        if se >= min_support {
                            prepend_info.push_str(&format!(" pre+{q}:ssra={se:.5}"));
                        }
                    }
                }
                println!(
                    "  lost {:?} real_sup {:.5} ssra_sup {:.5}{}{}",
                    key, pat.support, sup_ssra, extension_info, prepend_info
                );
            }
        }
    }
}
