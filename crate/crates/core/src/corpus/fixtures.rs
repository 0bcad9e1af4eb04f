//! Synthetic fixture databases: schema DDL and deterministic seeded
//! content for the three independent schemas (HR, warehouse, invoicing).
//!
//! These are reconstructions of the schema shapes only; the content is
//! synthetic. Every value pool used by the question templates is drawn
//! from the same data that lands in the database, so parameterized gold
//! queries can be made non-empty.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rusqlite::Connection;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Db {
    Hr,
    Wh,
    In,
}

impl Db {
    pub fn db_id(&self) -> &'static str {
        match self {
            Db::Hr => "hr",
            Db::Wh => "warehouse",
            Db::In => "invoicing",
        }
    }

    pub fn parse(s: &str) -> Option<Db> {
        match s.to_ascii_lowercase().as_str() {
            "hr" => Some(Db::Hr),
            "wh" | "warehouse" => Some(Db::Wh),
            "in" | "invoicing" => Some(Db::In),
            _ => None,
        }
    }
}

const FIRST_NAMES: &[&str] = &[
    "Ada", "Boris", "Carla", "Dmitri", "Elena", "Farid", "Greta", "Hugo", "Iris", "Jonas",
    "Kira", "Luis", "Mona", "Nils", "Olga", "Pavel", "Quinn", "Rosa", "Sven", "Tara",
];
const LAST_NAMES: &[&str] = &[
    "Almeida", "Baker", "Cords", "Dietz", "Engel", "Fuentes", "Gray", "Hansen", "Ito",
    "Jansen", "Keller", "Lopez", "Marsh", "Novak", "Olsen",
];
const DEPTS: &[&str] = &["Sales", "Engineering", "Marketing", "Finance", "Support", "R&D"];
const CITIES: &[&str] = &[
    "Rome", "Lisbon", "Oslo", "Prague", "Madrid", "Vienna", "Dublin", "Porto", "Ghent", "Turin",
];
const COUNTRIES: &[&str] = &["Italy", "Portugal", "Norway", "Czechia", "Spain", "Austria"];
const PRODUCT_WORDS: &[&str] = &[
    "Bolt", "Gear", "Lamp", "Valve", "Panel", "Cable", "Frame", "Lens", "Motor", "Pump",
    "Sensor", "Switch", "Bracket", "Filter", "Rotor", "Socket",
];
const PRODUCT_SIZES: &[&str] = &["Mini", "Standard", "Pro", "Max", "Ultra"];
const ROLES: &[&str] = &["analyst", "developer", "tester", "lead", "designer"];
const PROJECT_WORDS: &[&str] = &["Atlas", "Borealis", "Comet", "Dynamo", "Echo", "Falcon", "Gavial", "Helix"];

/// §3.3 concept lexicon statuses plus the Table-7 replica statuses.
pub const IN_STATUSES_LEXICON: &[&str] = &["R", "P", "A", "N", "D"];
pub const IN_STATUSES_TABLE7: &[&str] = &["RT", "RJ", "P", "A"];
const IN_ALL_STATUSES: &[&str] = &["R", "P", "A", "N", "D", "RT", "RJ"];

/// Content pools the templates sample from. Everything here is present in
/// the generated database.
#[derive(Debug, Clone, Default)]
pub struct FixtureData {
    pub employee_names: Vec<String>,
    pub managers: Vec<String>,
    pub depts: Vec<String>,
    pub salaries: Vec<i64>,
    pub bonuses: Vec<i64>,
    pub emp_nos: Vec<i64>,
    pub hire_dates: Vec<String>,

    pub product_names: Vec<String>,
    pub prices: Vec<f64>,
    pub manufacturer_names: Vec<String>,
    pub shop_names: Vec<String>,
    pub customer_names: Vec<String>,
    pub vendor_names: Vec<String>,
    pub cities: Vec<String>,
    pub countries: Vec<String>,
    pub sale_dates: Vec<String>,
    pub amounts: Vec<f64>,

    pub contract_numbers: Vec<i64>,
    pub cus_names: Vec<String>,
    pub bill_amounts: Vec<f64>,
    pub project_names: Vec<String>,
    pub assignee_names: Vec<String>,
    pub hours: Vec<i64>,
}

fn date(rng: &mut ChaCha8Rng, lo_year: i32, hi_year: i32) -> String {
    let y = rng.gen_range(lo_year..=hi_year);
    let m = rng.gen_range(1..=12);
    let d = rng.gen_range(1..=28);
    format!("{y:04}-{m:02}-{d:02}")
}

fn person_name(rng: &mut ChaCha8Rng) -> String {
    format!(
        "{} {}",
        FIRST_NAMES.choose(rng).unwrap(),
        LAST_NAMES.choose(rng).unwrap()
    )
}

pub const HR_DDL: &str = "
CREATE TABLE employees (
    emp_no INTEGER PRIMARY KEY,
    name TEXT,
    birthdate DATE,
    hire_date DATE,
    leave_date DATE,
    dept TEXT,
    manager TEXT,
    salary DECIMAL,
    bonus DECIMAL
);";

pub const WH_DDL: &str = "
CREATE TABLE vendors (
    vendor_id INTEGER PRIMARY KEY,
    name TEXT,
    city TEXT
);
CREATE TABLE shops (
    shop_id INTEGER PRIMARY KEY,
    name TEXT,
    city TEXT
);
CREATE TABLE manufacturers (
    manufacturer_id INTEGER PRIMARY KEY,
    name TEXT,
    country TEXT
);
CREATE TABLE products (
    product_id INTEGER PRIMARY KEY,
    price DECIMAL,
    name TEXT,
    manufacturer_id INTEGER REFERENCES manufacturers(manufacturer_id)
);
CREATE TABLE stock (
    stock_id INTEGER PRIMARY KEY,
    shop_id INTEGER REFERENCES shops(shop_id),
    product_id INTEGER REFERENCES products(product_id),
    quantity INTEGER
);
CREATE TABLE customers (
    customer_id INTEGER PRIMARY KEY,
    name TEXT,
    city TEXT
);
CREATE TABLE sales (
    sale_id INTEGER PRIMARY KEY,
    shop_id INTEGER REFERENCES shops(shop_id),
    customer_id INTEGER REFERENCES customers(customer_id),
    sale_date DATE
);
CREATE TABLE sales_details (
    sale_detail_id INTEGER PRIMARY KEY,
    sale_id INTEGER REFERENCES sales(sale_id),
    product_id INTEGER REFERENCES products(product_id),
    quantity INTEGER,
    amount DECIMAL
);";

pub const IN_DDL: &str = "
CREATE TABLE contract (
    con_number INTEGER PRIMARY KEY,
    cus_name TEXT,
    cus_address TEXT,
    con_status TEXT,
    amount DECIMAL
);
CREATE TABLE record (
    id INTEGER PRIMARY KEY,
    con_number INTEGER REFERENCES contract(con_number),
    bill_amnt DECIMAL,
    status TEXT,
    created TEXT,
    created_new TEXT,
    issue_date DATE
);
CREATE TABLE project (
    p_id INTEGER PRIMARY KEY,
    con_number INTEGER REFERENCES contract(con_number),
    name TEXT,
    status TEXT,
    p_date DATE
);
CREATE TABLE assignment (
    a_id INTEGER PRIMARY KEY,
    p_id INTEGER REFERENCES project(p_id),
    emp_name TEXT,
    role TEXT,
    hours INTEGER
);";

pub fn ddl(db: Db) -> &'static str {
    match db {
        Db::Hr => HR_DDL,
        Db::Wh => WH_DDL,
        Db::In => IN_DDL,
    }
}

/// Create and populate the fixture database at `conn`; returns the content
/// pools. Deterministic in `rng`.
pub fn populate(db: Db, conn: &Connection, rng: &mut ChaCha8Rng) -> Result<FixtureData> {
    conn.execute_batch("BEGIN")?;
    conn.execute_batch(ddl(db))?;
    let data = match db {
        Db::Hr => populate_hr(conn, rng)?,
        Db::Wh => populate_wh(conn, rng)?,
        Db::In => populate_in(conn, rng)?,
    };
    conn.execute_batch("COMMIT")?;
    Ok(data)
}

fn populate_hr(conn: &Connection, rng: &mut ChaCha8Rng) -> Result<FixtureData> {
    let mut data = FixtureData {
        depts: DEPTS.iter().map(|s| s.to_string()).collect(),
        ..FixtureData::default()
    };
    let managers: Vec<String> = (0..6).map(|_| person_name(rng)).collect();
    let mut stmt = conn.prepare(
        "INSERT INTO employees VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9)",
    )?;
    for i in 0..64i64 {
        let emp_no = 1000 + i;
        let name = format!("{} {}", FIRST_NAMES[(i as usize) % 20], LAST_NAMES.choose(rng).unwrap());
        let birth = date(rng, 1960, 1995);
        let hire = date(rng, 2005, 2019);
        let leave: Option<String> = if rng.gen_bool(0.2) { Some(date(rng, 2020, 2023)) } else { None };
        let dept = *DEPTS.choose(rng).unwrap();
        let manager = managers.choose(rng).unwrap().clone();
        let salary = rng.gen_range(40..150) * 1000;
        let bonus = rng.gen_range(0..20) * 500;
        stmt.execute(rusqlite::params![
            emp_no, name, birth, hire, leave, dept, manager, salary, bonus
        ])?;
        data.emp_nos.push(emp_no);
        data.employee_names.push(name);
        data.salaries.push(salary);
        data.bonuses.push(bonus);
        data.hire_dates.push(hire);
    }
    data.managers = managers;
    Ok(data)
}

fn populate_wh(conn: &Connection, rng: &mut ChaCha8Rng) -> Result<FixtureData> {
    let mut data = FixtureData {
        cities: CITIES.iter().map(|s| s.to_string()).collect(),
        countries: COUNTRIES.iter().map(|s| s.to_string()).collect(),
        ..FixtureData::default()
    };

    for i in 0..12i64 {
        let name = format!("{} Supplies", LAST_NAMES[(i as usize) % LAST_NAMES.len()]);
        let city = *CITIES.choose(rng).unwrap();
        conn.execute("INSERT INTO vendors VALUES (?1, ?2, ?3)", rusqlite::params![i + 1, name, city])?;
        data.vendor_names.push(name);
    }
    for i in 0..10i64 {
        let name = format!("{} Outlet", CITIES[(i as usize) % CITIES.len()]);
        let city = CITIES[(i as usize) % CITIES.len()].to_string();
        conn.execute("INSERT INTO shops VALUES (?1, ?2, ?3)", rusqlite::params![i + 1, name, city])?;
        data.shop_names.push(name);
    }
    for i in 0..8i64 {
        let name = format!("{} Works", PROJECT_WORDS[(i as usize) % PROJECT_WORDS.len()]);
        let country = *COUNTRIES.choose(rng).unwrap();
        conn.execute(
            "INSERT INTO manufacturers VALUES (?1, ?2, ?3)",
            rusqlite::params![i + 1, name, country],
        )?;
        data.manufacturer_names.push(name);
    }
    let mut seen_products = std::collections::HashSet::new();
    for i in 0..40i64 {
        let mut name;
        loop {
            name = format!(
                "{} {}",
                PRODUCT_SIZES.choose(rng).unwrap(),
                PRODUCT_WORDS.choose(rng).unwrap()
            );
            if seen_products.insert(name.clone()) {
                break;
            }
        }
        let price = (rng.gen_range(200..20000) as f64) / 100.0;
        let manufacturer = rng.gen_range(1..=8i64);
        conn.execute(
            "INSERT INTO products VALUES (?1, ?2, ?3, ?4)",
            rusqlite::params![i + 1, price, name, manufacturer],
        )?;
        data.product_names.push(name);
        data.prices.push(price);
    }
    for i in 0..120i64 {
        let shop = rng.gen_range(1..=10i64);
        let product = rng.gen_range(1..=40i64);
        let qty = rng.gen_range(0..500i64);
        conn.execute(
            "INSERT INTO stock VALUES (?1, ?2, ?3, ?4)",
            rusqlite::params![i + 1, shop, product, qty],
        )?;
    }
    for i in 0..25i64 {
        let name = person_name(rng);
        let city = *CITIES.choose(rng).unwrap();
        conn.execute(
            "INSERT INTO customers VALUES (?1, ?2, ?3)",
            rusqlite::params![i + 1, name, city],
        )?;
        data.customer_names.push(name);
    }
    for i in 0..80i64 {
        let shop = rng.gen_range(1..=10i64);
        let customer = rng.gen_range(1..=25i64);
        let d = date(rng, 2020, 2023);
        conn.execute(
            "INSERT INTO sales VALUES (?1, ?2, ?3, ?4)",
            rusqlite::params![i + 1, shop, customer, d],
        )?;
        data.sale_dates.push(d);
    }
    for i in 0..160i64 {
        let sale = rng.gen_range(1..=80i64);
        let product = rng.gen_range(1..=40i64);
        let qty = rng.gen_range(1..20i64);
        let amount = (rng.gen_range(500..50000) as f64) / 100.0;
        conn.execute(
            "INSERT INTO sales_details VALUES (?1, ?2, ?3, ?4, ?5)",
            rusqlite::params![i + 1, sale, product, qty, amount],
        )?;
        data.amounts.push(amount);
    }
    Ok(data)
}

fn populate_in(conn: &Connection, rng: &mut ChaCha8Rng) -> Result<FixtureData> {
    let mut data = FixtureData::default();
    for i in 0..25i64 {
        let con_number = 7000 + i;
        let cus = format!("{} {}", LAST_NAMES.choose(rng).unwrap(), ["Ltd", "GmbH", "SA", "Corp"].choose(rng).unwrap());
        let addr = format!("{} {} St", rng.gen_range(1..200), LAST_NAMES.choose(rng).unwrap());
        let status = *["Open", "Closed", "Hold"].choose(rng).unwrap();
        let amount = (rng.gen_range(10000..900000) as f64) / 100.0;
        conn.execute(
            "INSERT INTO contract VALUES (?1, ?2, ?3, ?4, ?5)",
            rusqlite::params![con_number, cus, addr, status, amount],
        )?;
        data.contract_numbers.push(con_number);
        data.cus_names.push(cus);
    }
    for i in 0..120i64 {
        let id = 1 + i;
        let con = 7000 + rng.gen_range(0..25i64);
        let bill = (rng.gen_range(1000..300000) as f64) / 100.0;
        // make sure every status value occurs
        let status = if i < IN_ALL_STATUSES.len() as i64 {
            IN_ALL_STATUSES[i as usize]
        } else {
            IN_ALL_STATUSES.choose(rng).unwrap()
        };
        let created = *["Y", "N"].choose(rng).unwrap();
        let created_new = *["Y", "N"].choose(rng).unwrap();
        let d = date(rng, 2019, 2023);
        conn.execute(
            "INSERT INTO record VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)",
            rusqlite::params![id, con, bill, status, created, created_new, d],
        )?;
        data.bill_amounts.push(bill);
    }
    for i in 0..30i64 {
        let p_id = 500 + i;
        let con = 7000 + rng.gen_range(0..25i64);
        let name = format!(
            "{} {}",
            PROJECT_WORDS[(i as usize) % PROJECT_WORDS.len()],
            ["Phase I", "Phase II", "Rollout", "Pilot"].choose(rng).unwrap()
        );
        let status = *["A", "C", "H"].choose(rng).unwrap();
        let d = date(rng, 2019, 2023);
        conn.execute(
            "INSERT INTO project VALUES (?1, ?2, ?3, ?4, ?5)",
            rusqlite::params![p_id, con, name, status, d],
        )?;
        data.project_names.push(name);
    }
    for i in 0..60i64 {
        let p_id = 500 + rng.gen_range(0..30i64);
        let emp = person_name(rng);
        let role = *ROLES.choose(rng).unwrap();
        let hours = rng.gen_range(10..400i64);
        conn.execute(
            "INSERT INTO assignment VALUES (?1, ?2, ?3, ?4, ?5)",
            rusqlite::params![1 + i, p_id, emp, role, hours],
        )?;
        data.assignee_names.push(emp);
        data.hours.push(hours);
    }
    Ok(data)
}

/// Domain-independent template rules shipped with the toolkit. The first
/// rule is the classic owner-has pattern; the second generalizes it to any
/// other verb; the third catches "X of Y" phrasings.
pub const DEFAULT_TRF: &str = "\
root=prop_owner_VAR1_has_VAR2_
-> has [hasPartOfSpeech(\"verb\"), hasLemmaForm(\"have\")]
subj -> VAR1 [!hasParseFeature(\"ving\"), hasLemmaForm(\"VAR1\")]
obj -> VAR2 [hasLemmaForm(\"VAR2\")]

root=prop_owner_VAR1_rel_VAR2_
-> rel [hasPartOfSpeech(\"verb\"), !hasLemmaForm(\"have\")]
subj -> VAR1 [!hasParseFeature(\"ving\"), hasLemmaForm(\"VAR1\")]
obj -> VAR2 [hasLemmaForm(\"VAR2\")]

root=prop_of_VAR2_of_VAR1_
-> of [hasLemmaForm(\"of\")]
subj -> VAR2 [hasLemmaForm(\"VAR2\")]
obj -> VAR1 [hasLemmaForm(\"VAR1\")]
";

/// Schema-annotation ontology for each fixture database.
pub fn saf_text(db: Db) -> &'static str {
    match db {
        Db::Hr => "\
employee has salary; tableName1 is EMPLOYEES; colName1 is EMP_NO; dataType1 is integer; tableName2 is EMPLOYEES; colName2 is SALARY; dataType2 is decimal;
employee has name; tableName1 is EMPLOYEES; colName1 is EMP_NO; dataType1 is integer; tableName2 is EMPLOYEES; colName2 is NAME; dataType2 is text;
employee has bonus; tableName1 is EMPLOYEES; colName1 is EMP_NO; dataType1 is integer; tableName2 is EMPLOYEES; colName2 is BONUS; dataType2 is decimal;
employee has department; tableName1 is EMPLOYEES; colName1 is EMP_NO; dataType1 is integer; tableName2 is EMPLOYEES; colName2 is DEPT; dataType2 is text;
employee has manager; tableName1 is EMPLOYEES; colName1 is EMP_NO; dataType1 is integer; tableName2 is EMPLOYEES; colName2 is MANAGER; dataType2 is text;
",
        Db::Wh => "\
product has price; tableName1 is PRODUCTS; colName1 is PRODUCT_ID; dataType1 is integer; tableName2 is PRODUCTS; colName2 is PRICE; dataType2 is decimal;
product has name; tableName1 is PRODUCTS; colName1 is PRODUCT_ID; dataType1 is integer; tableName2 is PRODUCTS; colName2 is NAME; dataType2 is text;
shop has city; tableName1 is SHOPS; colName1 is SHOP_ID; dataType1 is integer; tableName2 is SHOPS; colName2 is CITY; dataType2 is text;
customer has city; tableName1 is CUSTOMERS; colName1 is CUSTOMER_ID; dataType1 is integer; tableName2 is CUSTOMERS; colName2 is CITY; dataType2 is text;
customer has name; tableName1 is CUSTOMERS; colName1 is CUSTOMER_ID; dataType1 is integer; tableName2 is CUSTOMERS; colName2 is NAME; dataType2 is text;
manufacturer has country; tableName1 is MANUFACTURERS; colName1 is MANUFACTURER_ID; dataType1 is integer; tableName2 is MANUFACTURERS; colName2 is COUNTRY; dataType2 is text;
vendor has city; tableName1 is VENDORS; colName1 is VENDOR_ID; dataType1 is integer; tableName2 is VENDORS; colName2 is CITY; dataType2 is text;
stock has quantity; tableName1 is STOCK; colName1 is STOCK_ID; dataType1 is integer; tableName2 is STOCK; colName2 is QUANTITY; dataType2 is integer;
",
        Db::In => "\
invoice has status; tableName1 is RECORD; colName1 is ID; dataType1 is integer; tableName2 is RECORD; colName2 is STATUS; dataType2 is text;
invoice has amount; tableName1 is RECORD; colName1 is ID; dataType1 is integer; tableName2 is RECORD; colName2 is BILL_AMNT; dataType2 is decimal;
contract has customer; tableName1 is CONTRACT; colName1 is CON_NUMBER; dataType1 is integer; tableName2 is CONTRACT; colName2 is CUS_NAME; dataType2 is text;
project has status; tableName1 is PROJECT; colName1 is P_ID; dataType1 is integer; tableName2 is PROJECT; colName2 is STATUS; dataType2 is text;
assignment has hours; tableName1 is ASSIGNMENT; colName1 is A_ID; dataType1 is integer; tableName2 is ASSIGNMENT; colName2 is HOURS; dataType2 is integer;
",
    }
}
