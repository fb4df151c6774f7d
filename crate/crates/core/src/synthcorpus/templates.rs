//! Hand-written page templates with seeded lexical variation.
//!
//! Every template has a *fixed* element skeleton: instantiating it twice
//! changes only text and attribute values, never the tag tree. That makes
//! DOM-skeleton similarity meaningful across the corpus — two instances of
//! one template compare at exactly 1.0, and the "cloned storefront" variant
//! (same tree plus one injected credential form) stays above 0.95.
//!
//! Word pools are split on purpose: `DOMAIN_WORDS` feed generated hostnames
//! and never appear in page text, so a phishing page cannot accidentally
//! mention its own registrable label and look self-consistent.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;

/// Hyphen-free stems for ordinary benign storefront/blog domains.
pub(crate) const BENIGN_SITE_WORDS: [&str; 10] = [
    "lanternworks",
    "copperkettle",
    "maplecrate",
    "willowbay",
    "stonebridge",
    "brightfern",
    "cedarloom",
    "quietharbor",
    "goldenspruce",
    "rivermill",
];

/// Account names for personal pages parked on hosting services.
pub(crate) const HOSTED_USER_WORDS: [&str; 8] = [
    "gardennotes",
    "familyrecipes",
    "chessnights",
    "birdwatchers",
    "modeltrains",
    "bookcircle",
    "hikinglog",
    "potteryclass",
];

/// Invented brands the lure pages impersonate. Deliberately fictional.
pub(crate) const LURE_BRANDS: [&str; 6] = [
    "paybuddy",
    "bankero",
    "streamly",
    "mailhub",
    "cloudnest",
    "parcelrun",
];

/// Stems for phishing hostnames. Never used in any page text (see module
/// docs), so url/content consistency stays false for these pages.
pub(crate) const DOMAIN_WORDS: [&str; 8] = [
    "veraxo",
    "quillmont",
    "zephyrix",
    "drovano",
    "kelpshore",
    "fernadico",
    "lumostra",
    "brindlewick",
];

pub(crate) const CHEAP_TLDS: [&str; 5] = ["top", "xyz", "site", "online", "icu"];

const PRODUCTS: [&str; 12] = [
    "lamp", "teapot", "scarf", "journal", "basket", "candle", "mug", "blanket", "planter",
    "clock", "tray", "apron",
];

const ADJECTIVES: [&str; 8] = [
    "handmade", "vintage", "organic", "sturdy", "woven", "classic", "quiet", "bright",
];

const TOPICS: [&str; 8] = [
    "harvest season",
    "workshop tools",
    "weekend markets",
    "repair techniques",
    "garden planning",
    "winter storage",
    "local suppliers",
    "studio lighting",
];

pub(crate) fn pick<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str]) -> &'a str {
    pool.choose(rng).expect("pool is non-empty")
}

pub(crate) fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

/// Credential form block injected into the cloned storefront (six elements).
fn credential_form(action: &str) -> String {
    format!(
        "<form class=\"account-check\" action=\"{action}\" method=\"post\">\
<label>Email address</label><input type=\"email\" name=\"email\">\
<label>Password</label><input type=\"password\" name=\"password\">\
<button type=\"submit\">Confirm account</button></form>"
    )
}

/// Storefront with a hero section and a fixed 18-card product grid. The
/// skeleton is large enough that the cloned variant's injected form costs
/// less than five percent similarity.
fn shop_page_inner(title: &str, rng: &mut ChaCha8Rng, extra_block: &str) -> String {
    let store = capitalize(pick(rng, &ADJECTIVES));
    let mut html = String::new();
    write!(
        html,
        "<html><head><title>{title}</title></head><body>\
<header><h1>{store} Goods</h1><p>Independent makers since {year}</p>\
<nav><ul>",
        year = rng.gen_range(1985..=2015)
    )
    .unwrap();
    for section in ["New", "Kitchen", "Textiles", "Workshop", "Gifts", "Sale", "About", "Contact"]
    {
        write!(html, "<li><a href=\"/{}\">{section}</a></li>", section.to_lowercase()).unwrap();
    }
    write!(
        html,
        "</ul></nav></header><main><section class=\"hero\"><h2>{adj} picks this week</h2>\
<p>Every {product} is checked by hand before it ships.</p></section>{extra_block}\
<section class=\"grid\">",
        adj = capitalize(pick(rng, &ADJECTIVES)),
        product = pick(rng, &PRODUCTS),
    )
    .unwrap();
    for i in 0..18 {
        let adj = pick(rng, &ADJECTIVES);
        let product = pick(rng, &PRODUCTS);
        let price = rng.gen_range(8..=90);
        write!(
            html,
            "<div class=\"card\"><img src=\"/img/{product}{i}.jpg\" alt=\"{product}\">\
<h3>{name}</h3><p>A {adj} {product} for everyday use.</p>\
<span>${price}.00</span><button>Add to basket</button></div>",
            name = capitalize(product),
        )
        .unwrap();
    }
    write!(
        html,
        "</section></main><footer><p>Questions? Visit any {} stall.</p>\
<small>All prices include tax.</small></footer></body></html>",
        pick(rng, &TOPICS)
    )
    .unwrap();
    html
}

pub(crate) fn shop_page(title: &str, rng: &mut ChaCha8Rng) -> String {
    shop_page_inner(title, rng, "")
}

/// The trend-2 variant: the storefront skeleton with one credential form
/// spliced in after the hero section.
pub(crate) fn shop_page_cloned(title: &str, rng: &mut ChaCha8Rng) -> String {
    shop_page_inner(title, rng, &credential_form("/account/confirm"))
}

pub(crate) fn article_page(title: &str, rng: &mut ChaCha8Rng) -> String {
    let mut html = String::new();
    write!(
        html,
        "<html><head><title>{title}</title></head><body>\
<header><h1>{topic}</h1><p class=\"byline\">Posted {day} days ago</p></header>\
<main><article>",
        topic = capitalize(pick(rng, &TOPICS)),
        day = rng.gen_range(1..=28),
    )
    .unwrap();
    for i in 0..8 {
        if i % 4 == 0 {
            write!(html, "<h2>Notes on {}</h2>", pick(rng, &TOPICS)).unwrap();
        }
        write!(
            html,
            "<p>The {adj} approach to {topic} keeps coming up, and a {adj2} {product} \
makes it easier than it sounds.</p>",
            adj = pick(rng, &ADJECTIVES),
            topic = pick(rng, &TOPICS),
            adj2 = pick(rng, &ADJECTIVES),
            product = pick(rng, &PRODUCTS),
        )
        .unwrap();
    }
    write!(
        html,
        "<blockquote>Measure twice, order the {} once.</blockquote></article>\
<aside><ul>",
        pick(rng, &PRODUCTS)
    )
    .unwrap();
    for _ in 0..6 {
        write!(html, "<li>Related: {}</li>", pick(rng, &TOPICS)).unwrap();
    }
    write!(
        html,
        "</ul></aside></main><footer><p>Archive of {} notes.</p></footer></body></html>",
        pick(rng, &TOPICS)
    )
    .unwrap();
    html
}

/// Small sign-in page: used both for the rare legitimate member login and,
/// with a lure title, for pages parked on benign hosting services.
pub(crate) fn login_page(title: &str, heading: &str, rng: &mut ChaCha8Rng) -> String {
    format!(
        "<html><head><title>{title}</title></head><body>\
<main><h1>{heading}</h1><p>Session timed out after {mins} minutes of inactivity.</p>\
<form action=\"/session\" method=\"post\">\
<label>Email address</label><input type=\"email\" name=\"email\">\
<label>Password</label><input type=\"password\" name=\"password\">\
<button type=\"submit\">Sign in</button></form>\
<p><small>Trouble signing in? Contact support.</small></p></main></body></html>",
        mins = rng.gen_range(10..=60),
    )
}

/// A live page whose body claims to be an error page. Optionally hides a
/// credential form behind the error text.
pub(crate) fn fake_404_page(title: &str, hidden_form: bool, rng: &mut ChaCha8Rng) -> String {
    let form = if hidden_form {
        "<form class=\"gate\" style=\"display:none\" action=\"/verify\" method=\"post\">\
<label>Email address</label><input type=\"email\" name=\"email\">\
<label>Password</label><input type=\"password\" name=\"password\">\
<button type=\"submit\">Continue</button></form>"
    } else {
        ""
    };
    format!(
        "<html><head><title>{title}</title></head><body>\
<main><h1>404</h1><p>Page Not Found</p>\
<p>The document you requested is no longer available (ref {reference}).</p>\
{form}<a href=\"/\">Back to start</a></main></body></html>",
        reference = rng.gen_range(1000..=9999),
    )
}

/// A captcha shell with nothing behind it: no form, no inputs — the real
/// content would only be revealed to someone who solves the challenge.
pub(crate) fn captcha_page(title: &str, rng: &mut ChaCha8Rng) -> String {
    format!(
        "<html><head><title>{title}</title></head><body>\
<main><h1>Security check</h1>\
<p>Please confirm you are human to continue (check {check}).</p>\
<div class=\"captcha-box\"><p>Loading challenge…</p></div>\
<script src=\"/challenge/captcha.js\"></script></main></body></html>",
        check = rng.gen_range(1..=99),
    )
}

/// Identity-document collection page: email plus a file upload, with the
/// solicitation spelled out in the text.
pub(crate) fn doc_upload_page(title: &str, rng: &mut ChaCha8Rng) -> String {
    format!(
        "<html><head><title>{title}</title></head><body>\
<main><h1>Identity verification</h1>\
<p>Upload a photo of your passport or ID card to unlock your account \
within {hours} hours.</p>\
<form action=\"/upload\" method=\"post\" enctype=\"multipart/form-data\">\
<label>Email address</label><input type=\"email\" name=\"email\">\
<label>Document photo</label><input type=\"file\" name=\"document\">\
<button type=\"submit\">Submit for review</button></form>\
<footer><p>Reviewed within one business day.</p></footer></main></body></html>",
        hours = rng.gen_range(12..=48),
    )
}

/// Minimal initial body for pages that immediately script-redirect away.
pub(crate) fn redirect_stub(rng: &mut ChaCha8Rng) -> String {
    format!(
        "<html><head><title>Redirecting…</title>\
<script>setTimeout(function(){{window.location.replace(slot{n});}},5);</script>\
</head><body><p>One moment…</p></body></html>",
        n = rng.gen_range(1..=9),
    )
}

/// The page a trend-3 redirect actually lands on: player chrome wrapped
/// around a credential form.
pub(crate) fn video_login_page(title: &str, rng: &mut ChaCha8Rng) -> String {
    format!(
        "<html><head><title>{title}</title></head><body>\
<header><h1>Now playing</h1></header>\
<main><div class=\"player\"><div class=\"screen\"><p>Preview locked</p></div>\
<div class=\"controls\"><button>Play</button><button>HD</button><button>Full screen</button>\
</div></div><section class=\"overlay\"><h2>Sign in to keep watching</h2>\
<p>Free preview ended after {secs} seconds.</p>\
<form action=\"/session\" method=\"post\">\
<label>Email address</label><input type=\"email\" name=\"email\">\
<label>Password</label><input type=\"password\" name=\"password\">\
<button type=\"submit\">Continue watching</button></form></section></main>\
<footer><p>Stream quality adapts to your connection.</p></footer></body></html>",
        secs = rng.gen_range(20..=95),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domkit::{extract_skeleton, inspect_content, skeleton_similarity};
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn sim(a: &str, b: &str) -> f64 {
        let sa = extract_skeleton(a).unwrap();
        let sb = extract_skeleton(b).unwrap();
        skeleton_similarity(&sa, &sb)
    }

    #[test]
    fn same_template_instances_share_an_identical_skeleton() {
        let pairs = [
            (
                shop_page("A Shop", &mut rng(1)),
                shop_page("Other Shop", &mut rng(99)),
            ),
            (
                article_page("Notes", &mut rng(2)),
                article_page("More Notes", &mut rng(77)),
            ),
            (
                login_page("Sign in", "Welcome back", &mut rng(3)),
                login_page("Portal", "Hello again", &mut rng(55)),
            ),
        ];
        for (a, b) in &pairs {
            assert_ne!(a, b, "instances vary lexically");
            assert_eq!(sim(a, b), 1.0, "skeletons must match exactly");
        }
    }

    #[test]
    fn cloned_storefront_stays_within_five_percent_of_its_template() {
        let original = shop_page("Corner Store", &mut rng(4));
        let cloned = shop_page_cloned("Corner Store Deals", &mut rng(40));
        let s = sim(&original, &cloned);
        assert!(s >= 0.95, "clone similarity {s}");
        assert!(s < 1.0, "the injected form must actually change the tree");
    }

    #[test]
    fn unrelated_templates_are_clearly_dissimilar() {
        let shop = shop_page("Shop", &mut rng(5));
        let login = login_page("Sign in", "Welcome", &mut rng(6));
        let s = sim(&shop, &login);
        assert!(s <= 0.5, "unrelated similarity {s}");
    }

    #[test]
    fn fake_404_reads_as_invalid_and_can_hide_a_credential_form() {
        let bare = inspect_content(&fake_404_page("Not Found", false, &mut rng(7)), 200);
        assert!(bare.fake_invalid);
        assert_eq!(bare.form_count, 0);

        let armed = inspect_content(&fake_404_page("Not Found", true, &mut rng(8)), 200);
        assert!(armed.fake_invalid, "the hidden form does not cancel the claim");
        assert_eq!(armed.password_inputs, 1);
        assert_eq!(armed.email_inputs, 1);
    }

    #[test]
    fn captcha_shell_gates_and_offers_nothing_else() {
        let p = inspect_content(&captcha_page("Checking", &mut rng(9)), 200);
        assert!(p.captcha_gated);
        assert_eq!(p.form_count, 0);
        assert_eq!(p.password_inputs, 0);
    }

    #[test]
    fn document_upload_page_solicits_identity_documents() {
        let p = inspect_content(&doc_upload_page("Verify", &mut rng(10)), 200);
        assert_eq!(p.document_upload_inputs, 1);
        assert_eq!(p.email_inputs, 1);
        assert!(p.form_count >= 1);
    }

    #[test]
    fn video_login_seeks_credentials_behind_a_player() {
        let p = inspect_content(&video_login_page("Now Playing", &mut rng(11)), 200);
        assert_eq!(p.password_inputs, 1);
        assert_eq!(p.email_inputs, 1);
        assert!(p.form_count >= 1);
    }

    #[test]
    fn redirect_stub_is_minimal_and_scripted() {
        let p = inspect_content(&redirect_stub(&mut rng(12)), 200);
        assert_eq!(p.form_count, 0);
        assert!(p.script_count >= 1);
    }
}
