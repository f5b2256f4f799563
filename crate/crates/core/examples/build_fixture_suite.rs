//! Regenerates the offline fixture suite under `tests/fixtures/suite`.
//!
//! Every claim gets its own random caption and image directions; evidence
//! vectors are built at an exact cosine from them, so the similarity a
//! candidate receives is the one written here.
//!
//!     cargo run -p ooc-verify --example build_fixture_suite

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ooc_verify::filtering::{LanguageDetector, TrigramDetector};
use ooc_verify::image::content_digest;
use ooc_verify::reasoning::scripted::{BookedStance, DirectJudgement, StanceBook};
use ooc_verify::reasoning::{Label, Stance};
use ooc_verify::retrieval::fixture_path;
use ooc_verify::similarity::VectorTable;
use ooc_verify::RequestKind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

const DIM: usize = 32;

#[derive(Clone, Copy, PartialEq)]
enum Src {
    Text,
    Image,
}

struct Ev {
    src: Src,
    url: String,
    title: Option<&'static str>,
    snippet: Option<&'static str>,
    published_at: Option<&'static str>,
    language: Option<&'static str>,
    tsim: Option<f64>,
    vsim: Option<f64>,
    broken_image: bool,
    stance: Option<(Stance, &'static str)>,
}

fn ev(src: Src, url: &str, title: &'static str, snippet: &'static str) -> Ev {
    Ev {
        src,
        url: url.to_string(),
        title: Some(title),
        snippet: (!snippet.is_empty()).then_some(snippet),
        published_at: None,
        language: Some("en"),
        tsim: None,
        vsim: None,
        broken_image: false,
        stance: None,
    }
}

fn text(url: &str, title: &'static str, snippet: &'static str) -> Ev {
    ev(Src::Text, url, title, snippet)
}

fn image(url: &str, title: &'static str, snippet: &'static str) -> Ev {
    ev(Src::Image, url, title, snippet)
}

impl Ev {
    fn t(mut self, s: f64) -> Self {
        self.tsim = Some(s);
        self
    }
    fn v(mut self, s: f64) -> Self {
        self.vsim = Some(s);
        self
    }
    fn at(mut self, date: &'static str) -> Self {
        self.published_at = Some(date);
        self
    }
    fn lang(mut self, tag: &'static str) -> Self {
        self.language = Some(tag);
        self
    }
    fn broken_image(mut self) -> Self {
        self.broken_image = true;
        self
    }
    fn supports(mut self, why: &'static str) -> Self {
        self.stance = Some((Stance::Supports, why));
        self
    }
    fn refutes(mut self, why: &'static str) -> Self {
        self.stance = Some((Stance::Refutes, why));
        self
    }
}

struct Sample {
    id: &'static str,
    caption: &'static str,
    ooc: bool,
    direct: Option<(Label, u8)>,
    evidence: Vec<Ev>,
}

fn samples() -> Vec<Sample> {
    use Label::{Nooc, Ooc};
    vec![
        // Poisoned evidence from outside the allowlist outranks the reliable source.
        Sample {
            id: "s01",
            caption: "Floodwaters submerge the market square in Riverton after record rainfall on Tuesday.",
            ooc: true,
            direct: None,
            evidence: vec![
                image("https://www.viralscoop-daily.net/riverton-flood-live", "Riverton underwater: live pictures", "Shocking pictures show the Riverton market square under water this Tuesday as rain keeps falling.")
                    .t(0.88).v(0.97).at("2023-05-09")
                    .supports("The page presents the photo as this week's Riverton flood."),
                image("https://www.bbc.co.uk/news/uk-england-35123456", "Storm Desmond: Appleby town centre flooded", "The centre of Appleby was left under water after Storm Desmond brought record rainfall to Cumbria in December 2015.")
                    .t(0.74).v(0.93).at("2015-12-06")
                    .refutes("The identical photo was published in 2015 and shows Appleby during Storm Desmond, not Riverton."),
                text("https://www.theguardian.com/weather/2023/may/09/heavy-rain-warnings", "Met Office issues heavy rain warnings", "Forecasters issued yellow warnings for heavy rain across northern England on Tuesday, with localised flooding possible.")
                    .t(0.71).at("2023-05-09"),
            ],
        },
        Sample {
            id: "s02",
            caption: "Volunteers clear debris from the beach at Porthcawl during the annual spring clean-up.",
            ooc: false,
            direct: None,
            evidence: vec![
                image("https://www.truthwire-report.com/staged-cleanup-exposed", "EXPOSED: beach clean-up photo was staged", "Insiders claim the viral beach clean-up photo was staged by a marketing agency years ago in another country.")
                    .t(0.79).v(0.96).at("2023-04-20")
                    .refutes("The page claims the clean-up photo was staged elsewhere."),
                text("https://www.theguardian.com/uk-news/2023/apr/16/porthcawl-beach-clean", "Hundreds join Porthcawl beach clean", "Hundreds of volunteers gathered on the beach at Porthcawl on Sunday to clear plastic and debris as part of the annual spring clean-up.")
                    .t(0.86).v(0.90).at("2023-04-16")
                    .supports("The report describes the same clean-up at Porthcawl, matching people, place and time."),
            ],
        },
        Sample {
            id: "s03",
            caption: "Thousands march through Lisbon to protest rising rents, police said on Saturday.",
            ooc: true,
            direct: None,
            evidence: vec![
                image("https://www.dailybuzzhub.com/lisbon-rent-march", "Huge Lisbon rent march in pictures", "Crowds fill the streets of Lisbon in a massive march against rising rents this Saturday, organisers say.")
                    .t(0.90).v(0.98).at("2023-04-01")
                    .supports("The page shows the photo as Saturday's Lisbon rent march."),
                image("https://eu.usatoday.com/story/news/world/2013/03/02/portugal-austerity-protest/1955871/", "Portugal protesters rally against austerity", "Hundreds of thousands of people rallied in Lisbon and other Portuguese cities against austerity cuts in March 2013.")
                    .t(0.69).v(0.94).at("2013-03-02")
                    .refutes("The photo comes from the 2013 austerity protests, not a rent protest."),
            ],
        },
        Sample {
            id: "s04",
            caption: "Firefighters battle a wildfire in the hills above Santa Clarita on Thursday.",
            ooc: false,
            direct: None,
            evidence: vec![
                image("https://www.newsflash-unfiltered.net/old-fire-photo", "Old fire photo recycled again", "This dramatic firefighter photo is actually from Australia and years old, users on social media claim.")
                    .t(0.77).v(0.97).at("2022-09-09")
                    .refutes("The page claims the image is an old Australian photo."),
                image("https://www.washingtonpost.com/nation/2022/09/08/california-wildfire-santa-clarita/", "Wildfire forces evacuations near Santa Clarita", "Firefighters battled a fast-moving wildfire in the hills above Santa Clarita on Thursday as residents were ordered to evacuate.")
                    .t(0.89).v(0.92).at("2022-09-08")
                    .supports("The article shows the same scene above Santa Clarita on the same Thursday."),
            ],
        },
        // Only the reverse-image search finds the decisive evidence.
        Sample {
            id: "s05",
            caption: "Rescue workers search the rubble of a collapsed building in Izmir after this week's earthquake.",
            ooc: true,
            direct: Some((Nooc, 5)),
            evidence: vec![
                text("https://www.theguardian.com/world/2023/feb/10/turkey-earthquake-aftershocks", "Aftershocks rattle western Turkey", "A series of aftershocks was felt across western Turkey this week, though no major damage was reported in the region.")
                    .t(0.76).at("2023-02-10"),
                image("https://www.bbc.co.uk/news/world-europe-54772012", "Turkey earthquake: rescuers search Izmir rubble", "Rescue teams searched the rubble of collapsed buildings in Izmir after the Aegean Sea earthquake of October 2020.")
                    .t(0.72).v(0.95).at("2020-10-31")
                    .refutes("The photo was taken after the October 2020 earthquake, not this week."),
            ],
        },
        Sample {
            id: "s06",
            caption: "A crowded ferry leaves Calais as travellers rush home before the new border rules.",
            ooc: true,
            direct: Some((Nooc, 4)),
            evidence: vec![
                image("https://www.theguardian.com/uk-news/2016/jul/23/dover-port-delays-summer-getaway", "Dover delays: families stuck for hours", "Holidaymakers faced long queues and crowded ferries at Dover and Calais at the start of the summer getaway in July 2016.")
                    .t(0.66).v(0.94).at("2016-07-23")
                    .refutes("The image is from the July 2016 summer getaway, unrelated to new border rules."),
            ],
        },
        Sample {
            id: "s07",
            caption: "Students celebrate on the steps of the library after graduation at Ohio State University.",
            ooc: false,
            direct: Some((Ooc, 4)),
            evidence: vec![
                text("https://www.bbc.co.uk/news/education-65432100", "Graduation season begins across the country", "Universities across the country are preparing for graduation season, with ceremonies planned through early summer.")
                    .t(0.73).at("2023-05-01"),
                image("https://eu.usatoday.com/story/news/education/2023/05/07/ohio-state-graduation/70190000/", "Ohio State celebrates spring commencement", "Graduates celebrated on the steps of the Thompson Library after the Ohio State University spring commencement on Sunday.")
                    .t(0.84).v(0.92).at("2023-05-07")
                    .supports("The same photo appears in coverage of Ohio State's commencement."),
            ],
        },
        // Only the text search finds the decisive evidence.
        Sample {
            id: "s08",
            caption: "Protesters gather outside parliament in Wellington demanding action on housing costs.",
            ooc: true,
            direct: Some((Nooc, 5)),
            evidence: vec![
                text("https://www.washingtonpost.com/world/2022/02/10/new-zealand-vaccine-mandate-protest/", "Convoy protest against vaccine mandates reaches Wellington", "The photo of crowds outside parliament in Wellington shows the February 2022 convoy protest against vaccine mandates, not a housing protest.")
                    .t(0.82).at("2022-02-10")
                    .refutes("The crowd outside parliament was protesting vaccine mandates in 2022."),
                image("https://www.pexels-stock-images.com/photo/crowd-outside-building", "Crowd outside a government building", "")
                    .v(0.74),
            ],
        },
        Sample {
            id: "s09",
            caption: "Commuters wade through flooded streets in Mumbai as the monsoon arrives early.",
            ooc: false,
            direct: Some((Ooc, 5)),
            evidence: vec![
                text("https://www.bbc.co.uk/news/world-asia-india-61828212", "Mumbai monsoon arrives early, streets flood", "Commuters in Mumbai waded through flooded streets on Monday as the monsoon arrived earlier than forecast, disrupting trains.")
                    .t(0.88).at("2023-06-12")
                    .supports("The report confirms early-monsoon flooding in Mumbai with commuters wading through water."),
            ],
        },
        Sample {
            id: "s10",
            caption: "Supporters wave flags at a rally for the opposition candidate in Nairobi on Sunday.",
            ooc: true,
            direct: Some((Nooc, 6)),
            evidence: vec![
                text("https://www.theguardian.com/world/2017/aug/06/kenya-election-final-rallies", "Kenya's rivals hold final rallies before vote", "The widely shared picture of flag-waving supporters in Nairobi was taken at a 2017 rally for the then incumbent president.")
                    .t(0.79).at("2017-08-06")
                    .refutes("The rally pictured took place in 2017 and was for the incumbent, not the opposition candidate."),
                image("https://www.stockphotoarchive-free.com/rally-flags", "Flags at a rally", "")
                    .v(0.71),
            ],
        },
        // A low-similarity article from a trusted outlet is misleading.
        Sample {
            id: "s11",
            caption: "Residents queue for drinking water in Jackson after the city's treatment plant failed.",
            ooc: false,
            direct: None,
            evidence: vec![
                text("https://www.bbc.co.uk/news/world-us-canada-56131247", "Texas freeze leaves millions without water", "Residents across Texas queued for bottled water after a winter storm knocked out power to treatment plants in February 2021.")
                    .t(0.41).v(0.55).at("2021-02-19")
                    .refutes("The article describes queues in Texas in 2021, suggesting a different event."),
                text("https://eu.usatoday.com/story/news/nation/2022/08/31/jackson-mississippi-water-crisis/7948000/", "Jackson residents line up for water", "Residents of Jackson, Mississippi lined up for drinking water on Wednesday after the city's main treatment plant failed.")
                    .t(0.84).at("2022-08-31")
                    .supports("The report matches the Jackson water queues described in the caption."),
            ],
        },
        Sample {
            id: "s12",
            caption: "Smoke rises over Kyiv after a drone strike on the city's power grid this morning.",
            ooc: true,
            direct: None,
            evidence: vec![
                image("https://www.theguardian.com/world/2015/nov/22/crimea-blackout-pylons", "Crimea blackout after pylons damaged", "Smoke rose near damaged power pylons that cut electricity to Crimea in November 2015.")
                    .t(0.38).v(0.52).at("2015-11-22")
                    .supports("Coverage of attacks on power infrastructure seems consistent with the caption."),
                text("https://www.washingtonpost.com/world/2019/06/03/ukraine-chemical-plant-fire/", "Fire at chemical plant near Kyiv", "The widely shared picture of smoke over Kyiv was taken during a fire at a chemical plant on the city's outskirts in June 2019.")
                    .t(0.83).at("2019-06-03")
                    .refutes("The smoke pictured came from a 2019 chemical plant fire, not a drone strike."),
            ],
        },
        // A non-English page from an allowlisted outlet is set aside.
        Sample {
            id: "s13",
            caption: "A street artist paints a mural of a footballer in Buenos Aires ahead of the World Cup final.",
            ooc: false,
            direct: None,
            evidence: vec![
                image("https://www.bbc.co.uk/mundo/noticias-america-latina-63000000", "El mural que se volvio viral", "La imagen del mural fue pintada hace varios anos en otra ciudad y no tiene relacion con la final del campeonato del mundo que se juega este domingo.")
                    .t(0.78).v(0.96).lang("es").at("2022-12-16")
                    .refutes("El mural seria antiguo y de otra ciudad."),
                image("https://www.theguardian.com/football/2022/dec/16/buenos-aires-murals-world-cup-final", "Buenos Aires murals celebrate team before final", "A street artist in Buenos Aires paints a new mural of the national captain as the city prepares for Sunday's World Cup final.")
                    .t(0.85).v(0.93).at("2022-12-16")
                    .supports("The same mural and artist appear in coverage from Buenos Aires before the final."),
            ],
        },
        // Two pages of the same outlet share a title; only the first survives.
        Sample {
            id: "s14",
            caption: "Rangers patrol a reserve in Kenya after poachers killed two rhinos last night.",
            ooc: true,
            direct: None,
            evidence: vec![
                text("https://www.theguardian.com/environment/2018/jul/13/black-rhinos-die-translocation-kenya", "Black rhinos die after translocation in Kenya", "Rangers in Tsavo East national park guarded the sanctuary after several black rhinos died following a translocation in July 2018.")
                    .t(0.78).v(0.92).at("2018-07-13")
                    .refutes("The patrol photo relates to the 2018 translocation deaths, not poaching last night."),
                image("https://www.theguardian.com/environment/gallery/2018/jul/13/black-rhinos-die-translocation-kenya-pictures", "Black Rhinos Die After Translocation in Kenya!", "Pictures from the Tsavo East sanctuary where rangers patrolled after the rhino deaths in July 2018.")
                    .t(0.76).v(0.95).at("2018-07-13")
                    .refutes("The gallery shows the 2018 translocation story."),
                text("https://www.bbc.co.uk/news/world-africa-44825000", "Kenya investigates rhino deaths", "Kenya's wildlife service has opened an investigation into the deaths of endangered black rhinos moved to a new sanctuary.")
                    .t(0.72).at("2018-07-14"),
            ],
        },
        // Nothing retrieved: the verdict rests on the image and caption alone.
        Sample {
            id: "s15",
            caption: "A fisherman mends his nets on the harbour wall at dawn in Essaouira.",
            ooc: false,
            direct: Some((Nooc, 6)),
            evidence: vec![],
        },
        Sample {
            id: "s16",
            caption: "Tanks roll through the capital's main avenue during yesterday's independence parade.",
            ooc: true,
            direct: None,
            evidence: vec![],
        },
        // Both modalities agree.
        Sample {
            id: "s17",
            caption: "Tourists photograph the cherry blossoms along the Meguro river in Tokyo this week.",
            ooc: false,
            direct: None,
            evidence: vec![
                text("https://www.washingtonpost.com/travel/2023/03/28/tokyo-cherry-blossoms-peak/", "Tokyo's cherry blossoms reach full bloom", "Crowds of tourists lined the Meguro river in Tokyo this week to photograph cherry blossoms at full bloom.")
                    .t(0.87).v(0.88).at("2023-03-28")
                    .supports("The article describes tourists photographing blossoms along the Meguro river this week."),
                image("https://www.bbc.co.uk/news/in-pictures-65100000", "In pictures: spring blossoms in Japan", "Visitors admire the cherry blossoms along the Meguro river in Tokyo as the season peaks.")
                    .t(0.81).v(0.94).at("2023-03-29")
                    .supports("The same picture appears in a gallery of this year's blossoms in Tokyo."),
            ],
        },
        Sample {
            id: "s18",
            caption: "Migrants cross the Channel in a small boat near Dover on Monday morning.",
            ooc: true,
            direct: None,
            evidence: vec![
                image("https://www.bbc.co.uk/news/uk-46700000", "Migrant boats: Home Secretary declares major incident", "Migrants were photographed in a small boat near Dover in December 2018, when the Home Secretary declared a major incident.")
                    .t(0.83).v(0.96).at("2018-12-28")
                    .refutes("The photo dates from December 2018, not this Monday."),
                text("https://www.theguardian.com/uk-news/2018/dec/28/channel-migrants-major-incident", "Channel migrant crossings declared a major incident", "The home secretary declared a major incident in December 2018 after dozens of migrants crossed the Channel in small boats.")
                    .t(0.80).at("2018-12-28")
                    .refutes("The widely shared image comes from the 2018 crossings."),
            ],
        },
        // Irrelevant evidence, an unreadable thumbnail, and an unindexed snippet.
        Sample {
            id: "s19",
            caption: "The mayor cuts the ribbon to open the new light rail line in Seattle on Saturday.",
            ooc: false,
            direct: None,
            evidence: vec![
                text("https://www.washingtonpost.com/transportation/2023/08/26/seattle-light-rail-opening/", "Seattle opens new light rail line", "The mayor of Seattle cut the ribbon on Saturday to open the new light rail extension, with thousands riding on the first day.")
                    .t(0.86).v(0.91).broken_image().at("2023-08-26")
                    .supports("The article reports the mayor opening the Seattle light rail line on Saturday."),
                text("https://eu.usatoday.com/story/travel/2023/08/20/best-us-transit-cities/", "Best US cities for public transit", "A ranking of the best US cities for public transit puts Seattle among the top ten for commuters this year.")
                    .t(0.72).at("2023-08-20"),
                text("https://www.bbc.co.uk/news/business-66500000", "Rail strike dates announced", "Unindexed snippet about rail strike dates that has no vector in the embedding table.")
                    .at("2023-08-21"),
            ],
        },
        Sample {
            id: "s20",
            caption: "Farmers block a highway with tractors in protest against new fuel taxes in France.",
            ooc: true,
            direct: None,
            evidence: vec![
                image("https://www.theguardian.com/world/2019/nov/27/french-farmers-tractors-paris", "French farmers block Paris roads with tractors", "Farmers drove hundreds of tractors onto roads around Paris in November 2019 to protest against agricultural policy.")
                    .t(0.77).v(0.95).at("2019-11-27")
                    .refutes("The image shows a 2019 protest about agricultural policy, not fuel taxes."),
                text("https://www.bbc.co.uk/news/world-europe-67000000", "France debates fuel tax changes", "Members of the French parliament debated changes to fuel taxes this week amid growing concern about living costs.")
                    .t(0.74).at("2023-10-04"),
            ],
        },
        // More candidates than top-k; two pass within one borderline band.
        Sample {
            id: "s21",
            caption: "Climbers queue to reach the summit of Everest on a crowded day this season.",
            ooc: false,
            direct: None,
            evidence: vec![
                image("https://www.washingtonpost.com/world/2023/05/22/everest-crowds-summit-queue/", "Everest crowding returns this season", "Climbers queued for hours to reach the summit of Everest on one of the most crowded days of this season.")
                    .t(0.88).v(0.904).at("2023-05-22")
                    .supports("The same queue photo accompanies reports on crowding this season."),
                image("https://www.bbc.co.uk/news/world-asia-65600000", "Nepal issues record number of Everest permits", "Nepal issued a record number of permits for Everest this spring, raising concerns about crowding on summit days.")
                    .t(0.80).v(0.909).at("2023-05-10"),
                image("https://www.theguardian.com/world/2019/may/27/everest-traffic-jam-deaths", "Everest traffic jam blamed for deaths", "A photo of a long queue of climbers near the summit of Everest in May 2019 was widely shared after several deaths.")
                    .t(0.75).v(0.86).at("2019-05-27"),
                text("https://eu.usatoday.com/story/news/world/2023/05/30/everest-season-ends/70270000/", "Everest season ends with record summits", "The climbing season on Everest drew to a close with a record number of summits and a high number of deaths.")
                    .t(0.77).at("2023-05-30")
                    .refutes("Listed last; should not reach the reasoner at top-k 3."),
            ],
        },
        Sample {
            id: "s22",
            caption: "Police disperse crowds with water cannon during protests in Hong Kong this weekend.",
            ooc: true,
            direct: None,
            evidence: vec![
                image("https://www.bbc.co.uk/news/world-asia-china-49500000", "Hong Kong protests: water cannon used for first time", "Police in Hong Kong used water cannon against protesters for the first time in August 2019.")
                    .t(0.81).v(0.97).at("2019-08-25")
                    .refutes("The photo shows the first use of water cannon in August 2019."),
                image("https://www.hk-freepress-mirror.net/water-cannon-weekend", "Water cannon fired this weekend", "Water cannon fired at crowds this weekend, pictures circulating online show.")
                    .t(0.84).v(0.98).at("2023-07-01")
                    .supports("The page presents the picture as this weekend's events."),
            ],
        },
        Sample {
            id: "s23",
            caption: "Workers harvest grapes in a vineyard in Bordeaux at the start of the autumn harvest.",
            ooc: false,
            direct: None,
            evidence: vec![
                image("https://www.theguardian.com/world/2023/sep/12/bordeaux-grape-harvest", "Bordeaux harvest under way", "Workers picked grapes in a vineyard near Bordeaux as the autumn harvest got under way in France.")
                    .t(0.86).v(0.93).at("2023-09-12")
                    .supports("The same scene is reported from Bordeaux at the start of the harvest."),
            ],
        },
        Sample {
            id: "s24",
            caption: "Snow blankets the Acropolis in Athens after a rare winter storm on Wednesday.",
            ooc: false,
            direct: None,
            evidence: vec![
                image("https://www.washingtonpost.com/weather/2022/01/26/greece-athens-snow-acropolis/", "Rare snowfall blankets Athens", "A rare winter storm covered the Acropolis in Athens with snow on Wednesday, closing roads and schools.")
                    .t(0.85).v(0.95).at("2022-01-26")
                    .supports("The article shows the snow-covered Acropolis after Wednesday's storm."),
            ],
        },
    ]
}

fn unit(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let v: Vec<f64> = (0..DIM).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// A unit vector whose cosine with unit vector `c` is exactly `s` (up to rounding).
fn at_cosine(c: &[f64], s: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let r = unit(rng);
    let dot: f64 = r.iter().zip(c).map(|(a, b)| a * b).sum();
    let orth: Vec<f64> = r.iter().zip(c).map(|(a, b)| a - dot * b).collect();
    let n = orth.iter().map(|x| x * x).sum::<f64>().sqrt();
    let w = (1.0 - s * s).sqrt();
    c.iter().zip(&orth).map(|(a, b)| s * a + w * b / n).collect()
}

fn write_json(path: &Path, value: &impl serde::Serialize) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    let mut s = serde_json::to_string_pretty(value).unwrap();
    s.push('\n');
    fs::write(path, s).unwrap();
}

fn main() {
    let root: PathBuf = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/suite");
    for sub in ["images", "search", "vectors"] {
        let _ = fs::remove_dir_all(root.join(sub));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    let detector = TrigramDetector;

    let mut text_vectors = BTreeMap::new();
    let mut image_vectors = BTreeMap::new();
    let mut stances = BTreeMap::new();
    let mut direct = BTreeMap::new();
    let mut dataset = String::new();

    for sample in samples() {
        let claim_bytes = format!("claim image {}\n", sample.id).into_bytes();
        let claim_rel = format!("images/{}.img", sample.id);
        fs::create_dir_all(root.join("images")).unwrap();
        fs::write(root.join(&claim_rel), &claim_bytes).unwrap();
        let claim_digest = content_digest(&claim_bytes);

        let caption_vec = unit(&mut rng);
        let image_vec = unit(&mut rng);
        text_vectors.insert(sample.caption.to_string(), caption_vec.clone());
        image_vectors.insert(claim_digest.clone(), image_vec.clone());

        let mut text_records = Vec::new();
        let mut image_records = Vec::new();
        for (n, e) in sample.evidence.iter().enumerate() {
            let body = e.snippet.or(e.title).unwrap();
            if e.language == Some("en") {
                let detected = detector.detect(body);
                assert!(
                    detected.as_deref().is_none_or(|l| l == "en"),
                    "{}: English evidence detected as {detected:?}: {body}",
                    sample.id
                );
            }
            if let Some(s) = e.tsim {
                text_vectors.insert(body.to_string(), at_cosine(&caption_vec, s, &mut rng));
            }
            let image_url = e.vsim.map(|s| {
                let rel = format!("images/{}-e{}.img", sample.id, n + 1);
                let bytes = format!("evidence image {} #{}\n", sample.id, n + 1).into_bytes();
                image_vectors.insert(content_digest(&bytes), at_cosine(&image_vec, s, &mut rng));
                if !e.broken_image {
                    fs::create_dir_all(root.join("search/images")).unwrap();
                    fs::write(root.join("search").join(&rel), bytes).unwrap();
                }
                rel
            });
            let mut record = json!({"url": e.url, "title": e.title});
            if let Some(s) = e.snippet {
                record["snippet"] = json!(s);
            }
            if let Some(u) = image_url {
                record["image_url"] = json!(u);
            }
            if let Some(d) = e.published_at {
                record["published_at"] = json!(d);
            }
            if let Some(l) = e.language {
                record["language"] = json!(l);
            }
            match e.src {
                Src::Text => text_records.push(record),
                Src::Image => image_records.push(record),
            }
            if let Some((stance, why)) = e.stance {
                stances.insert(
                    e.url.clone(),
                    BookedStance {
                        stance,
                        rationale: why.to_string(),
                    },
                );
            }
        }
        let search = root.join("search");
        write_json(
            &fixture_path(&search, RequestKind::TextQuery, sample.caption),
            &json!({"records": text_records}),
        );
        write_json(
            &fixture_path(&search, RequestKind::ReverseImage, &claim_digest),
            &json!({"records": image_records}),
        );
        if let Some((label, confidence)) = sample.direct {
            direct.insert(sample.caption.to_string(), DirectJudgement { label, confidence });
        }
        dataset.push_str(
            &serde_json::to_string(&json!({
                "id": sample.id,
                "image_path": claim_rel,
                "caption": sample.caption,
                "ooc": sample.ooc,
            }))
            .unwrap(),
        );
        dataset.push('\n');
    }

    write_json(&root.join("vectors/text.json"), &VectorTable { dim: DIM, vectors: text_vectors });
    write_json(&root.join("vectors/image.json"), &VectorTable { dim: DIM, vectors: image_vectors });
    write_json(
        &root.join("stance_book.json"),
        &StanceBook {
            default_label: Label::Nooc,
            default_confidence: 3,
            decisive_confidence: 8,
            stances,
            direct,
        },
    );
    fs::write(root.join("dataset.jsonl"), dataset).unwrap();
    fs::write(
        root.join("config.toml"),
        "[retrieval]\nprovider = \"fixture\"\nfixture_dir = \"search\"\nevidence_image_dir = \"search\"\n\n\
         [embedding]\ntext_provider = \"fixture\"\ntext_table = \"vectors/text.json\"\n\
         image_provider = \"fixture\"\nimage_table = \"vectors/image.json\"\n\n\
         [reasoning]\nprovider = \"scripted\"\nstance_book = \"stance_book.json\"\n\n\
         [benchmark]\nworkers = 4\n",
    )
    .unwrap();
    println!("wrote fixture suite to {}", root.display());
}
