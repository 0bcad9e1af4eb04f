//! Parameterized question/SQL template pools for the fixture corpora.
//!
//! Parameters are sampled from the fixture content pools so gold queries
//! can return rows; the generator still executes every candidate and
//! rejects empty results, so templates only need to make non-emptiness
//! likely, not certain.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::fixtures::{Db, FixtureData, IN_STATUSES_LEXICON, IN_STATUSES_TABLE7};
use super::Variant;

type Generator = Box<dyn Fn(&mut ChaCha8Rng, &FixtureData) -> (String, String) + Send + Sync>;

pub struct Template {
    /// Template's SQL contains at least one string-equality comparison on a
    /// text column (required for the Fnc variant pool).
    pub has_text_eq: bool,
    pub gen: Generator,
}

fn t(
    has_text_eq: bool,
    gen: impl Fn(&mut ChaCha8Rng, &FixtureData) -> (String, String) + Send + Sync + 'static,
) -> Template {
    Template { has_text_eq, gen: Box::new(gen) }
}

fn sql_str(s: &str) -> String {
    s.replace('\'', "''")
}

fn pick<'a>(rng: &mut ChaCha8Rng, pool: &'a [String]) -> &'a str {
    pool.choose(rng).map(|s| s.as_str()).unwrap_or("missing")
}

fn pick_i64(rng: &mut ChaCha8Rng, pool: &[i64]) -> i64 {
    *pool.choose(rng).unwrap_or(&0)
}

/// A numeric threshold strictly below some pool element, so `> thr`
/// matches at least one row.
fn below(rng: &mut ChaCha8Rng, pool: &[i64]) -> i64 {
    (pick_i64(rng, pool) - 1).max(0)
}

fn below_f(rng: &mut ChaCha8Rng, pool: &[f64]) -> f64 {
    let v = *pool.choose(rng).unwrap_or(&1.0);
    ((v - 0.5).max(0.0) * 100.0).round() / 100.0
}

pub fn pool(db: Db, variant: Variant) -> Vec<Template> {
    let mut templates = match (db, variant) {
        (Db::Hr, Variant::With) => hr_with(),
        (Db::Hr, _) => hr_base(),
        (Db::Wh, Variant::With) => wh_with(),
        (Db::Wh, _) => wh_base(),
        (Db::In, Variant::With) => Vec::new(),
        (Db::In, _) => in_base(),
    };
    if variant == Variant::Fnc {
        templates.retain(|t| t.has_text_eq);
    }
    templates
}

fn hr_base() -> Vec<Template> {
    vec![
        t(false, |_, _| {
            ("Show all employee information.".into(), "SELECT * FROM employees".into())
        }),
        t(false, |rng, d| {
            let n = pick_i64(rng, &d.emp_nos);
            (
                format!("What is the name of employee number {n}?"),
                format!("SELECT name FROM employees WHERE emp_no = {n}"),
            )
        }),
        t(true, |rng, d| {
            let dept = pick(rng, &d.depts);
            (
                format!("List the names of employees in the {dept} department."),
                format!("SELECT name FROM employees WHERE dept = '{}'", sql_str(dept)),
            )
        }),
        t(true, |rng, d| {
            let dept = pick(rng, &d.depts);
            (
                format!("How many employees work in {dept}?"),
                format!("SELECT count(*) FROM employees WHERE dept = '{}'", sql_str(dept)),
            )
        }),
        t(true, |rng, d| {
            let dept = pick(rng, &d.depts);
            (
                format!("What is the average salary in the {dept} department?"),
                format!("SELECT avg(salary) FROM employees WHERE dept = '{}'", sql_str(dept)),
            )
        }),
        t(false, |rng, d| {
            let s = below(rng, &d.salaries);
            (
                format!("Which employees earn more than {s}?"),
                format!("SELECT name FROM employees WHERE salary > {s}"),
            )
        }),
        t(false, |rng, d| {
            let a = below(rng, &d.salaries);
            let b = a + 40000;
            (
                format!("Who earns between {a} and {b}?"),
                format!("SELECT name FROM employees WHERE salary BETWEEN {a} AND {b}"),
            )
        }),
        t(false, |rng, d| {
            let date = pick(rng, &d.hire_dates);
            (
                format!("List employees hired after {date}."),
                format!("SELECT name FROM employees WHERE hire_date >= '{date}'"),
            )
        }),
        t(false, |_, _| {
            (
                "Which employees have left the company?".into(),
                "SELECT name FROM employees WHERE leave_date IS NOT NULL".into(),
            )
        }),
        t(false, |_, _| {
            (
                "Which employees are still with the company?".into(),
                "SELECT name FROM employees WHERE leave_date IS NULL".into(),
            )
        }),
        t(true, |rng, d| {
            let m = pick(rng, &d.managers);
            (
                format!("Who reports to {m}?"),
                format!("SELECT name FROM employees WHERE manager = '{}'", sql_str(m)),
            )
        }),
        t(false, |_, _| {
            ("What departments are there?".into(), "SELECT DISTINCT dept FROM employees".into())
        }),
        t(false, |_, _| {
            (
                "How many different departments are there?".into(),
                "SELECT count(DISTINCT dept) FROM employees".into(),
            )
        }),
        t(false, |_, _| {
            ("What is the highest salary?".into(), "SELECT max(salary) FROM employees".into())
        }),
        t(true, |rng, d| {
            let dept = pick(rng, &d.depts);
            (
                format!("What is the lowest salary in {dept}?"),
                format!("SELECT min(salary) FROM employees WHERE dept = '{}'", sql_str(dept)),
            )
        }),
        t(true, |rng, d| {
            let dept = pick(rng, &d.depts);
            (
                format!("What is the total bonus paid to the {dept} department?"),
                format!("SELECT sum(bonus) FROM employees WHERE dept = '{}'", sql_str(dept)),
            )
        }),
        t(false, |rng, _| {
            let k = rng.gen_range(3..10);
            (
                format!("List the top {k} earners."),
                format!("SELECT name FROM employees ORDER BY salary DESC LIMIT {k}"),
            )
        }),
        t(false, |_, _| {
            (
                "Who has the maximum salary?".into(),
                "SELECT name FROM employees WHERE salary = (SELECT max(salary) FROM employees)"
                    .into(),
            )
        }),
        t(false, |_, _| {
            (
                "Show names and salaries from highest to lowest.".into(),
                "SELECT name, salary FROM employees ORDER BY salary DESC".into(),
            )
        }),
        t(false, |_, _| {
            (
                "How many employees does each department have?".into(),
                "SELECT dept, count(*) FROM employees GROUP BY dept".into(),
            )
        }),
        t(false, |rng, _| {
            let k = rng.gen_range(2..8);
            (
                format!("Which departments have more than {k} employees?"),
                format!("SELECT dept FROM employees GROUP BY dept HAVING count(*) > {k}"),
            )
        }),
        t(false, |_, _| {
            (
                "What is the average salary per department?".into(),
                "SELECT dept, avg(salary) FROM employees GROUP BY dept".into(),
            )
        }),
        t(false, |_, _| {
            (
                "Who earns more than the company average?".into(),
                "SELECT name FROM employees WHERE salary > (SELECT avg(salary) FROM employees)"
                    .into(),
            )
        }),
        t(true, |rng, d| {
            let d1 = pick(rng, &d.depts).to_string();
            let d2 = pick(rng, &d.depts).to_string();
            (
                format!("List employees in {d1} or {d2}."),
                format!(
                    "SELECT name FROM employees WHERE dept = '{}' OR dept = '{}'",
                    sql_str(&d1),
                    sql_str(&d2)
                ),
            )
        }),
        t(false, |rng, d| {
            let initial = d
                .employee_names
                .choose(rng)
                .and_then(|n| n.chars().next())
                .unwrap_or('A');
            (
                format!("Whose name starts with {initial}?"),
                format!("SELECT name FROM employees WHERE name LIKE '{initial}%'"),
            )
        }),
        t(true, |rng, d| {
            let dept = pick(rng, &d.depts);
            let s = below(rng, &d.salaries);
            (
                format!("Who works in {dept} and earns more than {s}?"),
                format!(
                    "SELECT name FROM employees WHERE dept = '{}' AND salary > {s}",
                    sql_str(dept)
                ),
            )
        }),
        t(false, |rng, d| {
            let d1 = pick(rng, &d.depts).to_string();
            let d2 = pick(rng, &d.depts).to_string();
            (
                format!("Show employees from the {d1} and {d2} departments."),
                format!(
                    "SELECT name, dept FROM employees WHERE dept IN ('{}', '{}')",
                    sql_str(&d1),
                    sql_str(&d2)
                ),
            )
        }),
        t(false, |rng, d| {
            let b = below(rng, &d.bonuses);
            (
                format!("Whose bonus exceeds {b}?"),
                format!("SELECT name FROM employees WHERE bonus > {b}"),
            )
        }),
        t(false, |rng, d| {
            let s = below(rng, &d.salaries);
            (
                format!("What are the names and departments of employees earning at least {s}?"),
                format!("SELECT name, dept FROM employees WHERE salary >= {s}"),
            )
        }),
        t(false, |rng, d| {
            let date = pick(rng, &d.hire_dates);
            (
                format!("How many employees were hired before {date}?"),
                format!("SELECT count(*) FROM employees WHERE hire_date <= '{date}'"),
            )
        }),
        t(true, |rng, d| {
            let dept = pick(rng, &d.depts);
            (
                format!("What is the earliest hire date in {dept}?"),
                format!("SELECT min(hire_date) FROM employees WHERE dept = '{}'", sql_str(dept)),
            )
        }),
        t(false, |_, _| {
            (
                "Show each manager with the number of direct reports.".into(),
                "SELECT manager, count(*) FROM employees GROUP BY manager".into(),
            )
        }),
    ]
}

fn hr_with() -> Vec<Template> {
    vec![
        t(false, |rng, d| {
            let s = below(rng, &d.salaries);
            (
                format!("Which departments have an average salary above {s}?"),
                format!(
                    "WITH dept_avg AS (SELECT dept, avg(salary) AS avg_sal FROM employees GROUP BY dept) \
                     SELECT dept FROM dept_avg WHERE avg_sal > {s}"
                ),
            )
        }),
        t(false, |_, _| {
            (
                "Which department has the highest average salary?".into(),
                "WITH dept_avg AS (SELECT dept, avg(salary) AS avg_sal FROM employees GROUP BY dept) \
                 SELECT dept FROM dept_avg ORDER BY avg_sal DESC LIMIT 1"
                    .into(),
            )
        }),
        t(true, |rng, d| {
            let dept = pick(rng, &d.depts);
            (
                format!("Who earns more than the average salary of the {dept} department?"),
                format!(
                    "WITH dept_avg AS (SELECT avg(salary) AS v FROM employees WHERE dept = '{}') \
                     SELECT name FROM employees JOIN dept_avg ON employees.salary > dept_avg.v",
                    sql_str(dept)
                ),
            )
        }),
        t(false, |_, _| {
            (
                "How many employees earn above the company average?".into(),
                "WITH company AS (SELECT avg(salary) AS v FROM employees) \
                 SELECT count(*) FROM employees JOIN company ON employees.salary > company.v"
                    .into(),
            )
        }),
        t(false, |rng, d| {
            let b = below(rng, &d.bonuses);
            (
                format!("Which departments pay a total bonus above {b}?"),
                format!(
                    "WITH dept_bonus AS (SELECT dept, sum(bonus) AS total FROM employees GROUP BY dept) \
                     SELECT dept FROM dept_bonus WHERE total > {b}"
                ),
            )
        }),
        t(false, |_, _| {
            (
                "What is the gap between the highest and lowest salary?".into(),
                "WITH extremes AS (SELECT max(salary) AS hi, min(salary) AS lo FROM employees) \
                 SELECT hi - lo FROM extremes"
                    .into(),
            )
        }),
        t(false, |rng, _| {
            let k = rng.gen_range(2..9);
            (
                format!("List departments with more than {k} people."),
                format!(
                    "WITH dept_counts AS (SELECT dept, count(*) AS n FROM employees GROUP BY dept) \
                     SELECT dept FROM dept_counts WHERE n > {k}"
                ),
            )
        }),
        t(false, |_, _| {
            (
                "Show every department with its average salary, highest first.".into(),
                "WITH dept_avg AS (SELECT dept, avg(salary) AS avg_sal FROM employees GROUP BY dept) \
                 SELECT dept, avg_sal FROM dept_avg ORDER BY avg_sal DESC"
                    .into(),
            )
        }),
        t(false, |_, _| {
            (
                "Which departments employ someone earning over 100000?".into(),
                "WITH rich AS (SELECT DISTINCT dept FROM employees WHERE salary > 100000) \
                 SELECT dept FROM rich ORDER BY dept ASC"
                    .into(),
            )
        }),
    ]
}

fn wh_base() -> Vec<Template> {
    vec![
        t(false, |rng, d| {
            let p = below_f(rng, &d.prices);
            (
                format!("Which products cost more than {p}?"),
                format!("SELECT name FROM products WHERE price > {p}"),
            )
        }),
        t(false, |_, _| {
            ("How many products are there?".into(), "SELECT count(*) FROM products".into())
        }),
        t(true, |rng, d| {
            let m = pick(rng, &d.manufacturer_names);
            (
                format!("What products does {m} make?"),
                format!(
                    "SELECT products.name FROM products JOIN manufacturers ON products.manufacturer_id = manufacturers.manufacturer_id WHERE manufacturers.name = '{}'",
                    sql_str(m)
                ),
            )
        }),
        t(true, |rng, d| {
            let c = pick(rng, &d.cities);
            (
                format!("Which shops are in {c}?"),
                format!("SELECT name FROM shops WHERE city = '{}'", sql_str(c)),
            )
        }),
        t(true, |rng, d| {
            let c = pick(rng, &d.cities);
            (
                format!("How many customers live in {c}?"),
                format!("SELECT count(*) FROM customers WHERE city = '{}'", sql_str(c)),
            )
        }),
        t(false, |_, _| {
            ("What is the average product price?".into(), "SELECT avg(price) FROM products".into())
        }),
        t(false, |rng, d| {
            let p = below_f(rng, &d.prices) + 1.0;
            (
                format!("List products cheaper than {p}."),
                format!("SELECT name FROM products WHERE price < {p}"),
            )
        }),
        t(false, |_, _| {
            (
                "What is the most expensive product?".into(),
                "SELECT name FROM products ORDER BY price DESC LIMIT 1".into(),
            )
        }),
        t(true, |rng, d| {
            let s = pick(rng, &d.shop_names);
            (
                format!("Which products are stocked at {s}?"),
                format!(
                    "SELECT DISTINCT products.name FROM products JOIN stock ON stock.product_id = products.product_id JOIN shops ON stock.shop_id = shops.shop_id WHERE shops.name = '{}'",
                    sql_str(s)
                ),
            )
        }),
        t(true, |rng, d| {
            let p = pick(rng, &d.product_names);
            (
                format!("What is the total stock of {p}?"),
                format!(
                    "SELECT sum(stock.quantity) FROM stock JOIN products ON stock.product_id = products.product_id WHERE products.name = '{}'",
                    sql_str(p)
                ),
            )
        }),
        t(false, |rng, d| {
            let date = pick(rng, &d.sale_dates);
            (
                format!("Which customers bought something on {date}?"),
                format!(
                    "SELECT DISTINCT customers.name FROM customers JOIN sales ON sales.customer_id = customers.customer_id WHERE sales.sale_date = '{date}'"
                ),
            )
        }),
        t(true, |rng, d| {
            let s = pick(rng, &d.shop_names);
            (
                format!("How many sales did {s} record?"),
                format!(
                    "SELECT count(*) FROM sales JOIN shops ON sales.shop_id = shops.shop_id WHERE shops.name = '{}'",
                    sql_str(s)
                ),
            )
        }),
        t(false, |_, _| {
            (
                "How many products does each manufacturer make?".into(),
                "SELECT manufacturers.name, count(*) FROM products JOIN manufacturers ON products.manufacturer_id = manufacturers.manufacturer_id GROUP BY manufacturers.name"
                    .into(),
            )
        }),
        t(false, |rng, _| {
            let k = rng.gen_range(1..5);
            (
                format!("Which manufacturers offer more than {k} products?"),
                format!(
                    "SELECT manufacturers.name FROM products JOIN manufacturers ON products.manufacturer_id = manufacturers.manufacturer_id GROUP BY manufacturers.name HAVING count(*) > {k}"
                ),
            )
        }),
        t(false, |rng, d| {
            let a = below_f(rng, &d.prices);
            let b = a + 50.0;
            (
                format!("Which products are priced between {a} and {b}?"),
                format!("SELECT name FROM products WHERE price BETWEEN {a} AND {b}"),
            )
        }),
        t(true, |rng, d| {
            let c = pick(rng, &d.countries);
            (
                format!("Which products come from manufacturers in {c}?"),
                format!(
                    "SELECT products.name FROM products JOIN manufacturers ON products.manufacturer_id = manufacturers.manufacturer_id WHERE manufacturers.country = '{}'",
                    sql_str(c)
                ),
            )
        }),
        t(false, |_, _| {
            (
                "What cities have a shop?".into(),
                "SELECT DISTINCT city FROM shops".into(),
            )
        }),
        t(false, |_, _| {
            (
                "Which cities have a shop or a customer?".into(),
                "SELECT city FROM shops UNION SELECT city FROM customers".into(),
            )
        }),
        t(false, |rng, d| {
            let a = below_f(rng, &d.amounts);
            (
                format!("Which sale lines exceed {a}?"),
                format!("SELECT sale_detail_id FROM sales_details WHERE amount > {a}"),
            )
        }),
        t(false, |rng, _| {
            let k = rng.gen_range(3..8);
            (
                format!("Show the {k} priciest products."),
                format!("SELECT name, price FROM products ORDER BY price DESC LIMIT {k}"),
            )
        }),
        t(true, |rng, d| {
            let c = pick(rng, &d.cities);
            (
                format!("Which vendors operate in {c}?"),
                format!("SELECT name FROM vendors WHERE city = '{}'", sql_str(c)),
            )
        }),
        // IN-list membership, not an equality: stays outside the Fnc pool
        t(false, |rng, d| {
            let m1 = pick(rng, &d.manufacturer_names).to_string();
            let m2 = pick(rng, &d.manufacturer_names).to_string();
            (
                format!("List products made by {m1} or {m2}."),
                format!(
                    "SELECT products.name FROM products JOIN manufacturers ON products.manufacturer_id = manufacturers.manufacturer_id WHERE manufacturers.name IN ('{}', '{}')",
                    sql_str(&m1),
                    sql_str(&m2)
                ),
            )
        }),
        t(false, |_, _| {
            (
                "Which products cost more than the average?".into(),
                "SELECT name FROM products WHERE price > (SELECT avg(price) FROM products)".into(),
            )
        }),
        t(true, |rng, d| {
            let cu = pick(rng, &d.customer_names);
            (
                format!("What did {cu} buy?"),
                format!(
                    "SELECT DISTINCT products.name FROM products JOIN sales_details ON sales_details.product_id = products.product_id JOIN sales ON sales_details.sale_id = sales.sale_id JOIN customers ON sales.customer_id = customers.customer_id WHERE customers.name = '{}'",
                    sql_str(cu)
                ),
            )
        }),
        t(false, |_, _| {
            (
                "How many customers are registered?".into(),
                "SELECT count(*) FROM customers".into(),
            )
        }),
        t(false, |rng, d| {
            let q = rng.gen_range(100..400);
            let _ = d;
            (
                format!("Which stock lines hold more than {q} units?"),
                format!("SELECT stock_id FROM stock WHERE quantity > {q}"),
            )
        }),
        t(false, |_, _| {
            (
                "Show each shop with its number of sales.".into(),
                "SELECT shops.name, count(*) FROM sales JOIN shops ON sales.shop_id = shops.shop_id GROUP BY shops.name"
                    .into(),
            )
        }),
        t(true, |rng, d| {
            let m = pick(rng, &d.manufacturer_names);
            (
                format!("What is the average price of {m} products?"),
                format!(
                    "SELECT avg(products.price) FROM products JOIN manufacturers ON products.manufacturer_id = manufacturers.manufacturer_id WHERE manufacturers.name = '{}'",
                    sql_str(m)
                ),
            )
        }),
        t(false, |_, _| {
            (
                "Which customers share a city with a shop?".into(),
                "SELECT name FROM customers WHERE city IN (SELECT city FROM shops)".into(),
            )
        }),
        t(false, |rng, d| {
            let letter = d
                .product_names
                .choose(rng)
                .and_then(|n| n.chars().next())
                .unwrap_or('M');
            (
                format!("Which products start with {letter}?"),
                format!("SELECT name FROM products WHERE name LIKE '{letter}%'"),
            )
        }),
        t(false, |_, _| {
            (
                "What is the total quantity sold per product?".into(),
                "SELECT products.name, sum(sales_details.quantity) FROM sales_details JOIN products ON sales_details.product_id = products.product_id GROUP BY products.name"
                    .into(),
            )
        }),
        t(true, |rng, d| {
            let m = pick(rng, &d.manufacturer_names).to_string();
            let p = below_f(rng, &d.prices);
            (
                format!("Which {m} products cost more than {p}?"),
                format!(
                    "SELECT products.name FROM products JOIN manufacturers ON products.manufacturer_id = manufacturers.manufacturer_id WHERE manufacturers.name = '{}' AND products.price > {p}",
                    sql_str(&m)
                ),
            )
        }),
        t(true, |rng, d| {
            let m = pick(rng, &d.manufacturer_names).to_string();
            let p = below_f(rng, &d.prices) + 1.0;
            (
                format!("Which {m} products cost under {p}?"),
                format!(
                    "SELECT products.name FROM products JOIN manufacturers ON products.manufacturer_id = manufacturers.manufacturer_id WHERE manufacturers.name = '{}' AND products.price < {p}",
                    sql_str(&m)
                ),
            )
        }),
        t(true, |rng, d| {
            let c1 = pick(rng, &d.cities).to_string();
            let c2 = pick(rng, &d.cities).to_string();
            (
                format!("List shops in {c1} or {c2}."),
                format!(
                    "SELECT name FROM shops WHERE city = '{}' OR city = '{}'",
                    sql_str(&c1),
                    sql_str(&c2)
                ),
            )
        }),
        t(true, |rng, d| {
            let c = pick(rng, &d.cities).to_string();
            let k = rng.gen_range(0..3);
            (
                format!("How many sales did shops in {c} make beyond {k}?"),
                format!(
                    "SELECT count(*) FROM sales JOIN shops ON sales.shop_id = shops.shop_id WHERE shops.city = '{}' AND sales.sale_id > {k}",
                    sql_str(&c)
                ),
            )
        }),
        t(true, |rng, d| {
            let cu = pick(rng, &d.customer_names).to_string();
            let a = below_f(rng, &d.amounts);
            (
                format!("Which purchases of {cu} exceed {a}?"),
                format!(
                    "SELECT sales_details.sale_detail_id FROM sales_details JOIN sales ON sales_details.sale_id = sales.sale_id JOIN customers ON sales.customer_id = customers.customer_id WHERE customers.name = '{}' AND sales_details.amount > {a}",
                    sql_str(&cu)
                ),
            )
        }),
    ]
}

fn wh_with() -> Vec<Template> {
    vec![
        t(false, |rng, d| {
            let p = below_f(rng, &d.prices);
            (
                format!("Which manufacturers have an average product price above {p}?"),
                format!(
                    "WITH man_avg AS (SELECT manufacturer_id, avg(price) AS avg_price FROM products GROUP BY manufacturer_id) \
                     SELECT manufacturers.name FROM manufacturers JOIN man_avg ON manufacturers.manufacturer_id = man_avg.manufacturer_id WHERE man_avg.avg_price > {p}"
                ),
            )
        }),
        t(false, |_, _| {
            (
                "Which shop recorded the most sales?".into(),
                "WITH shop_sales AS (SELECT shop_id, count(*) AS n FROM sales GROUP BY shop_id) \
                 SELECT shops.name FROM shops JOIN shop_sales ON shops.shop_id = shop_sales.shop_id ORDER BY shop_sales.n DESC LIMIT 1"
                    .into(),
            )
        }),
        t(false, |_, _| {
            (
                "Which products are priced above the catalog average?".into(),
                "WITH avg_price AS (SELECT avg(price) AS v FROM products) \
                 SELECT products.name FROM products JOIN avg_price ON products.price > avg_price.v"
                    .into(),
            )
        }),
        t(false, |rng, d| {
            let a = below_f(rng, &d.amounts);
            (
                format!("Which shops took in more than {a} across all sale lines?"),
                format!(
                    "WITH revenue AS (SELECT sales.shop_id AS shop_id, sum(sales_details.amount) AS total FROM sales JOIN sales_details ON sales_details.sale_id = sales.sale_id GROUP BY sales.shop_id) \
                     SELECT shops.name FROM shops JOIN revenue ON shops.shop_id = revenue.shop_id WHERE revenue.total > {a}"
                ),
            )
        }),
        t(false, |rng, _| {
            let k = rng.gen_range(100..400);
            (
                format!("Which products have more than {k} units on hand overall?"),
                format!(
                    "WITH on_hand AS (SELECT product_id, sum(quantity) AS units FROM stock GROUP BY product_id) \
                     SELECT products.name FROM products JOIN on_hand ON products.product_id = on_hand.product_id WHERE on_hand.units > {k}"
                ),
            )
        }),
        t(false, |_, _| {
            (
                "Which customer placed the most orders?".into(),
                "WITH per_customer AS (SELECT customer_id, count(*) AS n FROM sales GROUP BY customer_id) \
                 SELECT customers.name FROM customers JOIN per_customer ON customers.customer_id = per_customer.customer_id ORDER BY per_customer.n DESC LIMIT 1"
                    .into(),
            )
        }),
        t(false, |rng, _| {
            let k = rng.gen_range(1..4);
            (
                format!("List manufacturers with more than {k} products, busiest first."),
                format!(
                    "WITH per_man AS (SELECT manufacturer_id, count(*) AS n FROM products GROUP BY manufacturer_id) \
                     SELECT manufacturers.name FROM manufacturers JOIN per_man ON manufacturers.manufacturer_id = per_man.manufacturer_id WHERE per_man.n > {k} ORDER BY per_man.n DESC"
                ),
            )
        }),
        t(false, |_, _| {
            (
                "Show each city with its shop count.".into(),
                "WITH per_city AS (SELECT city, count(*) AS n FROM shops GROUP BY city) \
                 SELECT city, n FROM per_city ORDER BY n DESC"
                    .into(),
            )
        }),
    ]
}

fn in_base() -> Vec<Template> {
    let or_chain = |col: &str, values: &[&str]| -> String {
        values
            .iter()
            .map(|v| format!("{col} = '{v}'"))
            .collect::<Vec<_>>()
            .join(" OR ")
    };
    let lexicon_chain = or_chain("status", IN_STATUSES_LEXICON);
    let table7_chain = or_chain("status", IN_STATUSES_TABLE7);
    vec![
        t(true, move |_, _| {
            (
                "Show outstanding invoices.".into(),
                format!(
                    "SELECT id, bill_amnt FROM record WHERE ({lexicon_chain}) AND created_new = 'Y'"
                ),
            )
        }),
        t(true, move |_, _| {
            (
                "Which invoices are unsettled?".into(),
                format!("SELECT id, bill_amnt FROM record WHERE ({table7_chain}) AND created = 'Y'"),
            )
        }),
        t(true, |_, _| {
            (
                "What projects are open?".into(),
                "SELECT DISTINCT p_id FROM project WHERE status = 'A'".into(),
            )
        }),
        t(false, |rng, d| {
            let a = below_f(rng, &d.bill_amounts);
            (
                format!("Which invoices exceed {a}?"),
                format!("SELECT id FROM record WHERE bill_amnt > {a}"),
            )
        }),
        t(true, |rng, _| {
            let s = *["R", "P", "A", "N", "D", "RT", "RJ"].choose(rng).unwrap();
            (
                format!("How many invoices have status {s}?"),
                format!("SELECT count(*) FROM record WHERE status = '{s}'"),
            )
        }),
        t(false, |rng, d| {
            let n = pick_i64(rng, &d.contract_numbers);
            (
                format!("What is the amount of contract {n}?"),
                format!("SELECT amount FROM contract WHERE con_number = {n}"),
            )
        }),
        t(true, |rng, d| {
            let cu = pick(rng, &d.cus_names);
            (
                format!("Show the invoices for {cu}."),
                format!(
                    "SELECT record.id FROM record JOIN contract ON record.con_number = contract.con_number WHERE contract.cus_name = '{}'",
                    sql_str(cu)
                ),
            )
        }),
        t(false, |_, _| {
            (
                "How many invoices are there per status?".into(),
                "SELECT status, count(*) FROM record GROUP BY status".into(),
            )
        }),
        t(false, |rng, _| {
            let k = rng.gen_range(2..15);
            (
                format!("Which statuses appear on more than {k} invoices?"),
                format!("SELECT status FROM record GROUP BY status HAVING count(*) > {k}"),
            )
        }),
        t(false, |_, _| {
            (
                "List the ten largest invoices.".into(),
                "SELECT id, bill_amnt FROM record ORDER BY bill_amnt DESC LIMIT 10".into(),
            )
        }),
        t(true, |rng, d| {
            let p = pick(rng, &d.project_names);
            (
                format!("Who is assigned to {p}?"),
                format!(
                    "SELECT assignment.emp_name FROM assignment JOIN project ON assignment.p_id = project.p_id WHERE project.name = '{}'",
                    sql_str(p)
                ),
            )
        }),
        t(false, |_, _| {
            (
                "What is the total billed amount?".into(),
                "SELECT sum(bill_amnt) FROM record".into(),
            )
        }),
        t(true, move |rng, _| {
            let created = *["Y", "N"].choose(rng).unwrap();
            (
                format!("How many accepted or pending invoices have created set to {created}?"),
                format!(
                    "SELECT count(*) FROM record WHERE (status = 'A' OR status = 'P') AND created = '{created}'"
                ),
            )
        }),
        t(true, |_, _| {
            (
                "Show rejected or returned invoices with their amounts.".into(),
                "SELECT id, bill_amnt FROM record WHERE (status = 'RT' OR status = 'RJ' OR status = 'N' OR status = 'D') AND bill_amnt > 0"
                    .into(),
            )
        }),
        t(true, |rng, d| {
            let cu = pick(rng, &d.cus_names);
            (
                format!("What is the address of {cu}?"),
                format!("SELECT cus_address FROM contract WHERE cus_name = '{}'", sql_str(cu)),
            )
        }),
        t(true, |_, _| {
            (
                "List open contracts.".into(),
                "SELECT con_number FROM contract WHERE con_status = 'Open'".into(),
            )
        }),
        t(false, |rng, d| {
            let h = below(rng, &d.hours);
            (
                format!("Which assignments run longer than {h} hours?"),
                format!("SELECT a_id FROM assignment WHERE hours > {h}"),
            )
        }),
        t(true, |rng, _| {
            let role = *["analyst", "developer", "tester", "lead", "designer"].choose(rng).unwrap();
            (
                format!("Who works as a {role}?"),
                format!("SELECT DISTINCT emp_name FROM assignment WHERE role = '{role}'"),
            )
        }),
        t(false, |_, _| {
            (
                "How many projects does each contract cover?".into(),
                "SELECT con_number, count(*) FROM project GROUP BY con_number".into(),
            )
        }),
        t(false, |_, _| {
            (
                "What is the average invoice amount?".into(),
                "SELECT avg(bill_amnt) FROM record".into(),
            )
        }),
        t(true, |_, _| {
            (
                "Show invoices that are new and still in review.".into(),
                "SELECT id FROM record WHERE (status = 'R' OR status = 'P') AND created_new = 'Y'"
                    .into(),
            )
        }),
        t(false, |_, _| {
            (
                "Which invoices are above the average amount?".into(),
                "SELECT id FROM record WHERE bill_amnt > (SELECT avg(bill_amnt) FROM record)".into(),
            )
        }),
        t(true, |rng, d| {
            let cu = pick(rng, &d.cus_names);
            (
                format!("What projects belong to contracts of {cu}?"),
                format!(
                    "SELECT project.name FROM project JOIN contract ON project.con_number = contract.con_number WHERE contract.cus_name = '{}'",
                    sql_str(cu)
                ),
            )
        }),
        t(false, |_, _| {
            (
                "Show total assigned hours per project.".into(),
                "SELECT project.name, sum(assignment.hours) FROM assignment JOIN project ON assignment.p_id = project.p_id GROUP BY project.name"
                    .into(),
            )
        }),
        t(true, move |_, _| {
            (
                "Count outstanding invoices.".into(),
                format!("SELECT count(*) FROM record WHERE ({}) AND created_new = 'Y'", or_chain("status", IN_STATUSES_LEXICON)),
            )
        }),
        t(false, |rng, d| {
            let n = pick_i64(rng, &d.contract_numbers);
            (
                format!("How many invoices does contract {n} have?"),
                format!("SELECT count(*) FROM record WHERE con_number = {n}"),
            )
        }),
        t(true, |_, _| {
            (
                "List invoices that are neither accepted nor paid-out, with flags set.".into(),
                "SELECT id FROM record WHERE (status = 'N' OR status = 'D' OR status = 'R' OR status = 'RJ') AND created = 'Y'"
                    .into(),
            )
        }),
        t(false, |_, _| {
            (
                "Which contract has the biggest invoice?".into(),
                "SELECT con_number FROM record ORDER BY bill_amnt DESC LIMIT 1".into(),
            )
        }),
        t(true, |rng, _| {
            let s1 = *["A", "P"].choose(rng).unwrap();
            let s2 = *["R", "N", "D"].choose(rng).unwrap();
            (
                format!("Show invoices with status {s1} or {s2}."),
                format!("SELECT id FROM record WHERE status = '{s1}' OR status = '{s2}'"),
            )
        }),
        t(false, |rng, d| {
            let h = below(rng, &d.hours);
            (
                format!("Which roles log more than {h} hours in total?"),
                format!("SELECT role FROM assignment GROUP BY role HAVING sum(hours) > {h}"),
            )
        }),
        t(true, |_, _| {
            (
                "Which customers have an open project?".into(),
                "SELECT DISTINCT contract.cus_name FROM contract JOIN project ON project.con_number = contract.con_number WHERE project.status = 'A'"
                    .into(),
            )
        }),
    ]
}
