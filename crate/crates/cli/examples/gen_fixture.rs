//! Writes the small end-to-end fixture used by the CLI tests.
//!
//! ```text
//! cargo run -p kbscore-cli --example gen_fixture -- crates/cli/tests/fixtures
//! ```
//!
//! Twenty invented people in four groups, a 1000-line annotated corpus in
//! which people of a group share vocabulary, task files, documents for
//! fifteen of the people and a tiny "pretrained" vector file in which every
//! demonym is its country plus a fixed offset.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Person {
    canonical: &'static str,
    surface: &'static str,
    name: &'static str,
    group: usize,
    country: usize,
}

const COUNTRIES: [(&str, &str); 5] = [
    ("Canada", "Canadian"),
    ("United States of America", "American"),
    ("France", "French"),
    ("Germany", "German"),
    ("Brazil", "Brazilian"),
];

const PEOPLE: [Person; 20] = [
    Person { canonical: "Ada_Marlow", surface: "Marlow", name: "Ada Marlow", group: 0, country: 1 },
    Person { canonical: "Bruno_Keller", surface: "Keller", name: "Bruno Keller", group: 0, country: 3 },
    Person { canonical: "Clara_Duval", surface: "Duval", name: "Clara Duval", group: 0, country: 2 },
    Person { canonical: "Dmitri_Osei", surface: "Osei", name: "Dmitri Osei", group: 0, country: 0 },
    Person { canonical: "Robert_J._Vance", surface: "Vance", name: "Robert J. Vance", group: 0, country: 1 },
    Person { canonical: "Elena_Sousa", surface: "Sousa", name: "Elena Sousa", group: 1, country: 4 },
    Person { canonical: "Felix_Brandt", surface: "Brandt", name: "Felix Brandt", group: 1, country: 3 },
    Person { canonical: "Greta_Lind", surface: "Greta", name: "Greta Lind", group: 1, country: 0 },
    Person { canonical: "Hugo_Perrin", surface: "Perrin", name: "Hugo Perrin", group: 1, country: 2 },
    Person { canonical: "Iris_Calloway", surface: "Calloway", name: "Iris Calloway", group: 1, country: 1 },
    Person { canonical: "Jonas_Pereira", surface: "Pereira", name: "Jonas Pereira", group: 2, country: 4 },
    Person { canonical: "Kofi_Laurent", surface: "Laurent", name: "Kofi Laurent", group: 2, country: 2 },
    Person { canonical: "Lena_Vogel", surface: "Vogel", name: "Lena Vogel", group: 2, country: 3 },
    Person { canonical: "Marco_Tavares", surface: "Tavares", name: "Marco Tavares", group: 2, country: 4 },
    Person { canonical: "Nina_Hale", surface: "Hale", name: "Nina Hale", group: 2, country: 0 },
    Person { canonical: "Oskar_Weiss", surface: "Weiss", name: "Oskar Weiss", group: 3, country: 3 },
    Person { canonical: "Priya_Shaw", surface: "Shaw", name: "Priya Shaw", group: 3, country: 1 },
    Person { canonical: "Quentin_Roux", surface: "Roux", name: "Quentin Roux", group: 3, country: 2 },
    Person { canonical: "Rosa_Lima", surface: "Lima", name: "Rosa Lima", group: 3, country: 4 },
    Person { canonical: "Sven_Aalto", surface: "Aalto", name: "Sven Aalto", group: 3, country: 0 },
];

/// Words that co-occur with each group, professions first.
const GROUP_WORDS: [&[&str]; 4] = [
    &["politician", "lawyer", "senator", "election", "parliament", "campaign", "vote", "minister", "policy", "law professor"],
    &["singer", "songwriter", "musician", "album", "concert", "guitar", "tour", "song", "band", "stage"],
    &["footballer", "coach", "goal", "striker", "season", "club", "match", "league", "stadium", "trophy"],
    &["physicist", "chemist", "laboratory", "experiment", "theory", "particle", "journal", "molecule", "research", "professor"],
];

/// Professions per group with a base score; the first is the main one.
const GROUP_PROFESSIONS: [&[(&str, u8)]; 4] = [
    &[("Politician", 7), ("Lawyer", 4), ("Law Professor", 1)],
    &[("Singer", 7), ("Songwriter", 5), ("Musician", 3)],
    &[("Footballer", 7), ("Coach", 2)],
    &[("Physicist", 7), ("Chemist", 3)],
];

const FILLER: &[&str] = &[
    "the", "a", "of", "and", "in", "was", "with", "for", "after", "during", "his", "her", "their", "on",
    "new", "first", "famous", "local", "year", "city", "people", "many",
];

fn join(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn sentence(rng: &mut ChaCha8Rng) -> String {
    let p = PEOPLE.choose(rng).unwrap();
    let words = GROUP_WORDS[p.group];
    let mut parts: Vec<String> = vec![format!("[{}|{}]", p.canonical, p.surface)];
    let len = rng.random_range(5..10);
    for _ in 0..len {
        let roll: f64 = rng.random();
        if roll < 0.55 {
            parts.push(words.choose(rng).unwrap().to_string());
        } else if roll < 0.65 {
            let q = PEOPLE
                .iter()
                .filter(|q| q.group == p.group)
                .collect::<Vec<_>>()
                .choose(rng)
                .map(|q| format!("[{}|{}]", q.canonical, q.surface))
                .unwrap();
            parts.push(q);
        } else if roll < 0.72 {
            parts.push(COUNTRIES[p.country].0.to_string());
        } else {
            parts.push(FILLER.choose(rng).unwrap().to_string());
        }
    }
    let mut s = parts.join(" ");
    if rng.random_bool(0.3) {
        s.push(',');
        s.push_str(" in 19");
        s.push_str(&rng.random_range(10..99).to_string());
    }
    s.push('.');
    s
}

fn corpus(rng: &mut ChaCha8Rng) -> String {
    let mut out = String::new();
    for i in 0..1000 {
        let line = match i % 97 {
            13 => "[Broken_Annotation|never closed".to_string(),
            41 => "Short.".to_string(),
            _ => sentence(rng),
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}

fn profession_rows(rng: &mut ChaCha8Rng) -> (String, String) {
    let mut train = String::new();
    let mut kb = String::new();
    for p in &PEOPLE {
        for &(profession, base) in GROUP_PROFESSIONS[p.group] {
            let jitter: i8 = rng.random_range(-1..=1);
            let score = (base as i8 + jitter).clamp(0, 7);
            writeln!(train, "{}\t{profession}\t{score}", p.name).unwrap();
            writeln!(kb, "{}\t{profession}", p.name).unwrap();
        }
    }
    (train, kb)
}

fn nationality_rows() -> (String, String) {
    let mut train = String::new();
    let mut kb = String::new();
    for (i, p) in PEOPLE.iter().enumerate() {
        let main = COUNTRIES[p.country].0;
        writeln!(train, "{}\t{main}\t7", p.name).unwrap();
        writeln!(kb, "{}\t{main}", p.name).unwrap();
        if i % 3 == 0 {
            let other = COUNTRIES[(p.country + 1) % COUNTRIES.len()].0;
            writeln!(train, "{}\t{other}\t2", p.name).unwrap();
            writeln!(kb, "{}\t{other}", p.name).unwrap();
        }
    }
    (train, kb)
}

fn document(p: &Person, rng: &mut ChaCha8Rng) -> String {
    let (country, demonym) = COUNTRIES[p.country];
    let (other, other_demonym) = COUNTRIES[(p.country + 2) % COUNTRIES.len()];
    let words = GROUP_WORDS[p.group];
    let mut s = format!("{} (born 19{}) is a {demonym} {}. ", p.name, rng.random_range(40..99), words[0]);
    for _ in 0..rng.random_range(2..5) {
        write!(s, "{} worked in {country} on {} and {}. ", p.surface, words.choose(rng).unwrap(), words.choose(rng).unwrap()).unwrap();
    }
    if rng.random_bool(0.6) {
        write!(s, "Later {} spent 2 years in {other} with {other_demonym} colleagues. ", p.surface).unwrap();
    }
    s.push('\n');
    s
}

/// Countries, demonyms and a few distractors in 8 dimensions, with
/// `demonym = country + offset` exactly.
fn pretrained(rng: &mut ChaCha8Rng) -> String {
    let dim = 8;
    let offset: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut rows: Vec<(String, Vec<f32>)> = Vec::new();
    for (country, demonym) in COUNTRIES {
        let c: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let d: Vec<f32> = c.iter().zip(&offset).map(|(a, b)| a + b).collect();
        rows.push((country.to_lowercase().replace(' ', "_"), c));
        rows.push((demonym.to_lowercase(), d));
    }
    for w in ["river", "mountain", "capital", "language"] {
        rows.push((w.into(), (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()));
    }
    let mut out = format!("{} {dim}\n", rows.len());
    for (w, v) in rows {
        out.push_str(&w);
        for x in v {
            write!(out, " {x:.6}").unwrap();
        }
        out.push('\n');
    }
    out
}

const CONFIG: &str = "\
# Desk-scale fixture for the end-to-end tests.
corpus = corpus.txt
persons = persons.txt
profession_train = profession.train
profession_kb = profession.kb
nationality_train = nationality.train
nationality_kb = nationality.kb
professions = professions.txt
nationalities = nationalities.txt
mapping = mapping_overrides.tsv
pretrained = pretrained.vec
documents = documents

dim = 32
negatives = 5
rho = 1e-3
window = 4
epochs = 20
min_count = 2
seed = 7
workers = 1
";

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "crates/cli/tests/fixtures".into()));
    fs::create_dir_all(dir.join("documents"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(2017);

    fs::write(join(&dir, "corpus.txt"), corpus(&mut rng))?;
    let names: String = PEOPLE.iter().map(|p| format!("{}\n", p.name)).collect();
    fs::write(join(&dir, "persons.txt"), names)?;

    let (train, kb) = profession_rows(&mut rng);
    fs::write(join(&dir, "profession.train"), train)?;
    fs::write(join(&dir, "profession.kb"), kb)?;
    let (train, kb) = nationality_rows();
    fs::write(join(&dir, "nationality.train"), train)?;
    fs::write(join(&dir, "nationality.kb"), kb)?;

    let mut professions: Vec<&str> = GROUP_PROFESSIONS.iter().flat_map(|g| g.iter().map(|p| p.0)).collect();
    professions.push("Author");
    fs::write(join(&dir, "professions.txt"), professions.join("\n") + "\n")?;
    let nationalities: Vec<&str> = COUNTRIES.iter().map(|c| c.0).collect();
    fs::write(join(&dir, "nationalities.txt"), nationalities.join("\n") + "\n")?;
    fs::write(join(&dir, "mapping_overrides.tsv"), "brazil\tbrazilian\n")?;
    fs::write(join(&dir, "pretrained.vec"), pretrained(&mut rng))?;

    for (i, p) in PEOPLE.iter().enumerate() {
        if i % 4 == 3 {
            continue;
        }
        let token = p.canonical.to_lowercase().replace('.', "");
        fs::write(dir.join("documents").join(token), document(p, &mut rng))?;
    }
    fs::write(join(&dir, "kbscore.conf"), CONFIG)?;
    Ok(())
}
