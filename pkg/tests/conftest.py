"""Shared fixtures: record builders and small careers used across modules."""
from __future__ import annotations

import pytest

from scimigrate.geoinfer import load_default_gazetteer
from scimigrate.records import AuthorDossier, AuthorshipRecord, Corpus, UNKNOWN
from scimigrate.taxonomy import load_default_table

from datetime import date


def make_record(
    author_id="A1",
    pub_id="P1",
    year=2010,
    affiliation_text="Some Institute",
    country="RU",
    asjc_codes=(1600,),
    citation_count=0,
) -> AuthorshipRecord:
    return AuthorshipRecord(
        author_id=author_id,
        pub_id=pub_id,
        year=year,
        affiliation_text=affiliation_text,
        country=country,
        asjc_codes=tuple(asjc_codes),
        citation_count=citation_count,
    )


def make_corpus(records, snapshot_year=2020) -> Corpus:
    return Corpus(records=tuple(records), snapshot_date=date(snapshot_year, 12, 31))


def make_dossier(records) -> AuthorDossier:
    recs = sorted(records, key=lambda r: (r.pub_id, r.year, r.country, r.affiliation_text))
    return AuthorDossier(author_id=recs[0].author_id, records=tuple(recs))


@pytest.fixture(scope="session")
def gazetteer():
    return load_default_gazetteer()


@pytest.fixture(scope="session")
def asjc_table():
    return load_default_table()


@pytest.fixture
def three_paper_career() -> AuthorDossier:
    """A short career that moves from RU to US across three publications.

    One mathematics paper at home, one chemistry+energy paper during the
    move year (affiliations on both sides), then one mathematics+chemistry
    paper abroad. Five subject annotations in total.
    """
    return make_dossier(
        [
            make_record(pub_id="P111", year=2012, country="RU", asjc_codes=(2600,)),
            make_record(pub_id="P222", year=2013, country="RU", asjc_codes=(1600, 2100)),
            make_record(
                pub_id="P222",
                year=2013,
                country="US",
                affiliation_text="Another Institute",
                asjc_codes=(1600, 2100),
            ),
            make_record(pub_id="P333", year=2015, country="US", asjc_codes=(2600, 1600)),
        ]
    )


@pytest.fixture
def unknown_country_record() -> AuthorshipRecord:
    return make_record(country=UNKNOWN, affiliation_text="Orphan Lab")
