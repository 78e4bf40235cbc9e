"""Self-contained demo datasets in the Spider directory layout.

Two small databases ship with the package: a flight/aircraft pair for the
aggregate-explanation walkthrough and a miniature world database (countries,
cities, languages) for the case-study queries.  ``build_dataset`` writes
both plus a matching tables.json under any root directory.
"""

from __future__ import annotations

import json
import sqlite3
from pathlib import Path

FLIGHT_DB = "flight_2"
WORLD_DB = "world_1"
CONCERT_DB = "concert_singer"

FLIGHT_ROWS = [
    (9, 2, "Los Angeles", "Tokyo"),
    (3, 7, "Los Angeles", "Sydney"),
    (3, 13, "Los Angeles", "Chicago"),
    (10, 68, "Chicago", "New York"),
    (9, 76, "Chicago", "Los Angeles"),
    (7, 33, "Los Angeles", "Honolulu"),
    (5, 34, "Los Angeles", "Honolulu"),
    (1, 99, "Los Angeles", "Washington D.C."),
    (2, 346, "Los Angeles", "Dallas"),
    (6, 387, "Los Angeles", "Boston"),
]

AIRCRAFT_ROWS = [
    (1, "Boeing 747-400", 8430),
    (2, "Boeing 737-800", 3383),
    (3, "Airbus A340-300", 7120),
    (4, "British Aerospace Jetstream 41", 1502),
    (5, "Embraer ERJ-145", 1530),
    (6, "SAAB 340", 2128),
    (7, "Piper Archer III", 520),
    (8, "Tupolev 154", 4103),
    (9, "Lockheed L1011", 6900),
    (10, "Boeing 757-300", 4010),
]

COUNTRY_ROWS = [
    ("ABW", "Aruba", "North America"),
    ("AIA", "Anguilla", "North America"),
    ("CAN", "Canada", "North America"),
    ("FRA", "France", "Europe"),
    ("GBR", "United Kingdom", "Europe"),
    ("IRQ", "Iraq", "Asia"),
    ("RUS", "Russian Federation", "Europe"),
    ("SYC", "Seychelles", "Africa"),
]

CITY_ROWS = [
    ("Oranjestad", "ABW"),
    ("Nabereznyje Tšelny", "RUS"),
    ("Moscow", "RUS"),
    ("London", "GBR"),
    ("Paris", "FRA"),
    ("Baghdad", "IRQ"),
]

LANGUAGE_ROWS = [
    ("ABW", "Dutch", "T"),
    ("ABW", "English", "F"),
    ("ABW", "Papiamento", "F"),
    ("ABW", "Spanish", "F"),
    ("AIA", "English", "T"),
    ("CAN", "English", "T"),
    ("CAN", "French", "T"),
    ("FRA", "French", "T"),
    ("GBR", "English", "T"),
    ("IRQ", "Arabic", "T"),
    ("IRQ", "Assyrian", "F"),
    ("IRQ", "Azerbaijani", "F"),
    ("IRQ", "Kurdish", "T"),
    ("IRQ", "Persian", "F"),
    ("RUS", "Russian", "T"),
    ("SYC", "English", "T"),
    ("SYC", "French", "T"),
]

CONCERT_ROWS = [(1, "Super bootcamp", 2014), (2, "Home Visits", 2015)]
SINGER_ROWS = [(1, "Joe Sharp", "Netherlands"), (2, "Timbaland", "United States")]
SINGER_IN_CONCERT_ROWS = [(1, 2), (2, 1), (2, 2)]


def _db_file(root: Path, db_id: str) -> Path:
    path = root / "database" / db_id / f"{db_id}.sqlite"
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.exists():
        path.unlink()
    return path


def build_flight_db(root: str | Path) -> Path:
    path = _db_file(Path(root), FLIGHT_DB)
    conn = sqlite3.connect(path)
    conn.executescript(
        """
        CREATE TABLE aircraft (
            aid INT PRIMARY KEY,
            name TEXT,
            distance INTEGER
        );
        CREATE TABLE flight (
            aid INT,
            flno INT PRIMARY KEY,
            origin TEXT,
            destination TEXT,
            FOREIGN KEY (aid) REFERENCES aircraft(aid)
        );
        """
    )
    conn.executemany("INSERT INTO aircraft VALUES (?, ?, ?)", AIRCRAFT_ROWS)
    conn.executemany("INSERT INTO flight VALUES (?, ?, ?, ?)", FLIGHT_ROWS)
    conn.commit()
    conn.close()
    return path


def build_world_db(root: str | Path) -> Path:
    path = _db_file(Path(root), WORLD_DB)
    conn = sqlite3.connect(path)
    conn.executescript(
        """
        CREATE TABLE country (
            code TEXT PRIMARY KEY,
            name TEXT,
            continent TEXT
        );
        CREATE TABLE city (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            name TEXT,
            countrycode TEXT,
            FOREIGN KEY (countrycode) REFERENCES country(code)
        );
        CREATE TABLE countrylanguage (
            countrycode TEXT,
            language TEXT,
            isofficial TEXT,
            PRIMARY KEY (countrycode, language),
            FOREIGN KEY (countrycode) REFERENCES country(code)
        );
        """
    )
    conn.executemany("INSERT INTO country VALUES (?, ?, ?)", COUNTRY_ROWS)
    conn.executemany("INSERT INTO city (name, countrycode) VALUES (?, ?)", CITY_ROWS)
    conn.executemany("INSERT INTO countrylanguage VALUES (?, ?, ?)", LANGUAGE_ROWS)
    conn.commit()
    conn.close()
    return path


def build_concert_db(root: str | Path) -> Path:
    path = _db_file(Path(root), CONCERT_DB)
    conn = sqlite3.connect(path)
    conn.executescript(
        """
        CREATE TABLE concert (
            concert_id INTEGER PRIMARY KEY,
            concert_name TEXT,
            year INTEGER
        );
        CREATE TABLE singer (
            singer_id INTEGER PRIMARY KEY,
            name TEXT,
            country TEXT
        );
        CREATE TABLE singer_in_concert (
            concert_id INTEGER,
            singer_id INTEGER,
            FOREIGN KEY (concert_id) REFERENCES concert(concert_id),
            FOREIGN KEY (singer_id) REFERENCES singer(singer_id)
        );
        """
    )
    conn.executemany("INSERT INTO concert VALUES (?, ?, ?)", CONCERT_ROWS)
    conn.executemany("INSERT INTO singer VALUES (?, ?, ?)", SINGER_ROWS)
    conn.executemany("INSERT INTO singer_in_concert VALUES (?, ?)", SINGER_IN_CONCERT_ROWS)
    conn.commit()
    conn.close()
    return path


def tables_json_entries() -> list[dict]:
    return [
        {
            "db_id": FLIGHT_DB,
            "table_names_original": ["flight", "aircraft"],
            "column_names_original": [
                [-1, "*"],
                [0, "aid"], [0, "flno"], [0, "origin"], [0, "destination"],
                [1, "aid"], [1, "name"], [1, "distance"],
            ],
            "column_types": ["text", "number", "number", "text", "text",
                             "number", "text", "number"],
            "primary_keys": [2, 5],
            "foreign_keys": [[1, 5]],
        },
        {
            "db_id": WORLD_DB,
            "table_names_original": ["city", "sqlite_sequence", "country", "countrylanguage"],
            "column_names_original": [
                [-1, "*"],
                [0, "id"], [0, "name"], [0, "countrycode"],
                [1, "name"], [1, "seq"],
                [2, "code"], [2, "name"], [2, "continent"],
                [3, "countrycode"], [3, "language"], [3, "isofficial"],
            ],
            "column_types": ["text", "number", "text", "text", "text", "number",
                             "text", "text", "text", "text", "text", "text"],
            "primary_keys": [1, 6, 9, 10],
            "foreign_keys": [[3, 6], [9, 6]],
        },
        {
            "db_id": CONCERT_DB,
            "table_names_original": ["concert", "singer", "singer_in_concert"],
            "column_names_original": [
                [-1, "*"],
                [0, "concert_id"], [0, "concert_name"], [0, "year"],
                [1, "singer_id"], [1, "name"], [1, "country"],
                [2, "concert_id"], [2, "singer_id"],
            ],
            "column_types": ["number", "text", "number", "number", "text",
                             "text", "number", "number"],
            "primary_keys": [1, 4],
            "foreign_keys": [[7, 1], [8, 4]],
        },
    ]


def build_dataset(root: str | Path) -> Path:
    """Write all demo databases plus tables.json; returns the root path."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    build_flight_db(root)
    build_world_db(root)
    build_concert_db(root)
    (root / "tables.json").write_text(
        json.dumps(tables_json_entries(), indent=2), encoding="utf-8"
    )
    return root
