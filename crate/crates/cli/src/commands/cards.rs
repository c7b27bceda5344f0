use std::collections::BTreeMap;

use foresight_core::domain::{builtin_use_cases, SystemicRisk};
use foresight_core::rubric::{assign_batches, build_cards, cards_html, BatchSpec, CardIndex, SYSTEMIC_RISK_DEFINITION};

use super::{read_risks, write_file};
use crate::config::CliConfig;
use crate::manifest::{prepare_out_dir, RunManifest};
use crate::CardsArgs;

fn pretty<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

pub fn run(args: CardsArgs, seed: u64) -> Result<u8, String> {
    if args.risks.is_empty() {
        return Err("no --risks files given".into());
    }
    let use_cases = match &args.config {
        Some(p) => CliConfig::load(p)?.use_cases(),
        None => builtin_use_cases(),
    };
    let mut by_case: BTreeMap<String, Vec<SystemicRisk>> = BTreeMap::new();
    for path in &args.risks {
        for r in read_risks(path)? {
            by_case.entry(r.use_case_id.clone()).or_default().push(r);
        }
    }
    let mut cards = Vec::new();
    let mut index = CardIndex::default();
    for (id, risks) in &by_case {
        let uc = use_cases
            .iter()
            .find(|u| &u.id == id)
            .ok_or_else(|| format!("unknown use case `{id}`"))?;
        let (c, i) = build_cards(risks, uc, SYSTEMIC_RISK_DEFINITION).map_err(|e| e.to_string())?;
        for (card_id, origin) in i.origins {
            if index.origins.insert(card_id.clone(), origin).is_some() {
                return Err(format!("card {card_id} appears twice"));
            }
        }
        cards.extend(c);
    }

    prepare_out_dir(&args.out, args.force)?;
    let mut manifest = RunManifest::new("cards", &args.out, seed);
    manifest.config_path = args.config.clone();
    let mut written = Vec::new();
    for card in &cards {
        write_file(&args.out.join("cards").join(format!("{}.json", card.card_id)), pretty(card), &mut written)?;
    }
    write_file(&args.out.join("cards.html"), cards_html(&cards), &mut written)?;
    write_file(&args.out.join("card_index.json"), pretty(&index), &mut written)?;
    if let Some(n) = args.evaluators {
        let evaluators: Vec<String> = (1..=n).map(|i| format!("evaluator-{i:03}")).collect();
        let plan = assign_batches(&cards, &index, &evaluators, BatchSpec::default(), seed).map_err(|e| e.to_string())?;
        write_file(&args.out.join("batches.json"), pretty(&plan), &mut written)?;
    }
    manifest.add_files(&written)?;
    manifest.write(0)?;
    println!("{} cards written to {}", cards.len(), args.out.display());
    Ok(0)
}
