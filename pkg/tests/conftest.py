import pytest

from groundeval import CaseRecord, MockBackend


@pytest.fixture
def backend():
    return MockBackend(seed=0)


@pytest.fixture
def medical_case():
    # Section and evidence texts contain sentences that fixture completions
    # quote verbatim, which the mock backend scores as entailment.
    return CaseRecord(
        id="case-001",
        domain="medical",
        anchor="Chief complaint: chest pain and dyspnea. HPI: two days of exertional chest pain.",
        sections=(
            ("exam", "Physical exam: the troponin level is elevated at 4.67 with BP 153/90."),
            ("imaging", "Imaging: echocardiogram shows reduced ejection fraction of 42 percent."),
        ),
        evidence=("Guideline: elevated troponin with regional wall motion abnormality indicates myocardial injury.",),
        references=("Acute myocardial infarction", "Heart failure", "Chronic ischemic heart disease"),
    )


@pytest.fixture
def legal_case():
    return CaseRecord(
        id="bar-001",
        domain="legal",
        anchor="Fact pattern: a landlord entered the tenant's apartment without notice to inspect the premises.",
        sections=(),
        evidence=("A landlord must provide reasonable notice before entering a rented dwelling.",),
        references=("B",),
        gold_passage=("A landlord must provide reasonable notice before entering a rented dwelling. "
                      "In emergencies no notice is required."),
    )


def medical_completion(names_and_reasonings):
    """Build a canonical medical completion from (name, reasoning) pairs."""
    import json

    return json.dumps({
        "diagnoses": [{"name": n, "reasoning": r} for n, r in names_and_reasonings]
    })
