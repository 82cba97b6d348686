#!/usr/bin/env python3
"""Regenerate the crawl fixtures and the curation plan.

Everything here is deterministic: fixed record content and solid-color PNG
bytes, so blob hashes and golden files stay stable. Run from the repo root:

    python3 tools/make_fixtures.py
"""

from __future__ import annotations

import json
import struct
import sys
import zlib
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"


def png_bytes(rgb: tuple[int, int, int], size: int = 4) -> bytes:
    raw = b"".join(b"\x00" + bytes(rgb) * size for _ in range(size))

    def chunk(tag: bytes, data: bytes) -> bytes:
        return (struct.pack(">I", len(data)) + tag + data
                + struct.pack(">I", zlib.crc32(tag + data) & 0xFFFFFFFF))

    ihdr = struct.pack(">IIBBBBB", size, size, 8, 2, 0, 0, 0)
    return (b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", ihdr)
            + chunk(b"IDAT", zlib.compress(raw, 9)) + chunk(b"IEND", b""))


IMAGES = {
    "img9070a.png": (180, 30, 30),
    "img9070b.png": (30, 180, 30),
    "img7102a.png": (30, 30, 180),
    "img7104a.png": (180, 180, 30),
    "img7105a.png": (30, 180, 180),
    "img8001a.png": (180, 30, 180),
}


def meta(contributor: str, created: str) -> dict:
    return {
        "contributor": contributor,
        "contributor_affiliation": "Uniformed Services University",
        "editor": "J. Smirniotopoulos",
        "reviewer": "Editorial Board",
        "review_date": created,
        "created": created,
        "modified": created,
        "status": "published",
        "copyright": "Courtesy of the contributing institution",
    }


CASES = [
    {
        "uid": "9070",
        "title": '74 yo woman with "tearing" chest pain.',
        "url": "https://medpix.example.gov/case/9070",
        "acr_code": "56.71",
        "patient": {"sex": "female", "age": "74", "ethnic_group": "Caucasian",
                    "species": "human"},
        "history": {
            "clinical": "Sudden onset of severe chest pain radiating to the back.",
            "general": "Hypertension for 20 years, poorly controlled.",
        },
        "exam": "BP 190/110 right arm, 150/90 left arm. Diastolic murmur.",
        "findings": "Widened mediastinum. Intimal flap extending from the aortic "
                    "root to the descending aorta with a double lumen.",
        "differential": "Aortic dissection; myocardial infarction; pulmonary embolism.",
        "diagnosis": "Aortic dissection, Stanford type A.",
        "diagnosis_confirmation": "Surgery",
        "discussion": "Classic presentation of acute aortic dissection. The "
                      "intimal flap and discrepant arm pressures are typical.",
        "treatment": "Emergency surgical repair of the ascending aorta.",
        "followup": "Discharged day 12; surveillance CT at 3 months.",
        "prognosis": "Guarded; untreated type A dissection has high mortality.",
        "pathology": "Cystic medial degeneration of the aortic wall.",
        "encounters": [
            {"type": "emergency", "note": "Presented via ambulance at 03:40.",
             "facility": "University Hospital ED", "date": "1999-11-02"},
            {"type": "surgery", "note": "Taken to theatre within two hours.",
             "facility": "University Hospital OR 4", "date": "1999-11-02"},
        ],
        "images": [
            {"caption": "PA chest radiograph: widened mediastinum.",
             "file": "img9070a.png", "modality": "XR", "plane": "PA",
             "width": 512, "height": 512, "format": "png"},
            {"caption": "Contrast CT: intimal flap with true and false lumen.",
             "file": "img9070b.png", "modality": "CT", "plane": "axial",
             "width": 512, "height": 512, "format": "png"},
        ],
        "topics": ["9203"],
        "meta": meta("T. Sanders MD", "1999-11-20"),
    },
    {
        "uid": "7102",
        "title": "28 yo man with sudden pleuritic chest pain while climbing.",
        "url": "https://medpix.example.gov/case/7102",
        "acr_code": "60.23",
        "patient": {"sex": "male", "age": "28", "ethnic_group": "Asian",
                    "species": "human"},
        "history": {
            "clinical": "Sudden right-sided chest pain and breathlessness.",
            "general": "Tall, thin body habitus. Smoker, 5 pack-years.",
        },
        "exam": "Reduced breath sounds on the right, hyperresonant percussion.",
        "findings": "Visible visceral pleural line with absent peripheral lung "
                    "markings on the right.",
        "differential": "Spontaneous pneumothorax; bullous emphysema.",
        "diagnosis": "Primary spontaneous pneumothorax.",
        "diagnosis_confirmation": "Imaging",
        "discussion": "Primary spontaneous pneumothorax is most common in tall "
                      "young men and recurs in roughly a third of patients.",
        "treatment": "Intercostal catheter drainage; pleurodesis discussed.",
        "followup": "Full re-expansion at 48 hours.",
        "prognosis": "Excellent, with counselling about recurrence and diving.",
        "pathology": "Apical subpleural blebs.",
        "encounters": [
            {"type": "emergency", "note": "Walked in, saturations 93%.",
             "facility": "City Hospital ED", "date": "2001-03-14"},
        ],
        "images": [
            {"caption": "Erect PA film: right pneumothorax with pleural line.",
             "file": "img7102a.png", "modality": "XR", "plane": "PA",
             "width": 486, "height": 612, "format": "png"},
        ],
        "topics": ["4501", "4502"],
        "meta": meta("A. Rivera MD", "2001-03-30"),
    },
    {
        "uid": "7103",
        "title": "41 yo woman post line insertion with dyspnea.",
        "url": "https://medpix.example.gov/case/7103",
        "acr_code": "60.23",
        "patient": {"sex": "female", "age": "41", "ethnic_group": "Hispanic",
                    "species": "human"},
        "history": {
            "clinical": "Dyspnea after subclavian central line placement.",
            "general": "Undergoing chemotherapy; no lung disease.",
        },
        "exam": "Tachypneic; trachea midline; reduced breath sounds left apex.",
        "findings": "Small left apical pneumothorax adjacent to the catheter tip.",
        "differential": "Iatrogenic pneumothorax; catheter malposition.",
        "diagnosis": "Iatrogenic pneumothorax after central venous access.",
        "diagnosis_confirmation": "Imaging",
        "discussion": "Pneumothorax complicates 1-3% of subclavian punctures; "
                      "small collections may be observed with repeat imaging.",
        "treatment": "Observation, high-flow oxygen, repeat film at 6 hours.",
        "followup": "Resolved without drainage.",
        "prognosis": "Excellent.",
        "pathology": "",
        "encounters": [
            {"type": "inpatient", "note": "Oncology ward day 2.",
             "facility": "City Hospital Oncology", "date": "2002-07-09"},
        ],
        "images": [
            {"caption": "Post-procedure film: left apical pneumothorax.",
             "external_url": "https://pacs.example.edu/series/7103/pa.png",
             "modality": "XR", "plane": "PA", "width": 486, "height": 612,
             "format": "png"},
        ],
        "topics": ["4501", "4503"],
        "meta": meta("A. Rivera MD", "2002-07-21"),
    },
    {
        "uid": "7104",
        "title": "63 yo man with pleuritic pain and hemoptysis after flight.",
        "url": "https://medpix.example.gov/case/7104",
        "acr_code": "60.74",
        "patient": {"sex": "male", "age": "63", "ethnic_group": "African American",
                    "species": "human"},
        "history": {
            "clinical": "Pleuritic pain and one episode of hemoptysis after a "
                        "long-haul flight.",
            "general": "Recent knee arthroplasty six weeks ago.",
        },
        "exam": "Swollen tender right calf; pleural rub at the left base.",
        "findings": "Filling defects in segmental pulmonary arteries; peripheral "
                    "wedge-shaped opacity at the left base.",
        "differential": "Pulmonary embolism; pneumonia; malignancy.",
        "diagnosis": "Acute pulmonary embolism with pulmonary infarct.",
        "diagnosis_confirmation": "Imaging",
        "discussion": "CT pulmonary angiography demonstrates emboli directly; a "
                      "peripheral infarct may mimic pneumonia.",
        "treatment": "Therapeutic anticoagulation.",
        "followup": "Stable at clinic review, 3 months anticoagulation planned.",
        "prognosis": "Good once anticoagulated.",
        "pathology": "",
        "encounters": [
            {"type": "emergency", "note": "Wells score high.",
             "facility": "City Hospital ED", "date": "2003-01-28"},
        ],
        "images": [
            {"caption": "CTPA: segmental filling defects.",
             "file": "img7104a.png", "modality": "CT", "plane": "axial",
             "width": 512, "height": 512, "format": "png"},
            {"caption": "Follow-up film: wedge opacity left base.",
             "external_url": "https://pacs.example.edu/series/7104/followup.png",
             "modality": "XR", "plane": "PA", "width": 486, "height": 612,
             "format": "png"},
        ],
        "topics": ["4502", "4504"],
        "meta": meta("K. Osei MD", "2003-02-11"),
    },
    {
        "uid": "7105",
        "title": "19 yo man struck in a rugby tackle, short of breath.",
        "url": "https://medpix.example.gov/case/7105",
        "acr_code": "60.23",
        "patient": {"sex": "male", "age": "19", "ethnic_group": "Caucasian",
                    "species": "human"},
        "history": {
            "clinical": "Blunt chest trauma during sport, left-sided pain.",
            "general": "Previously well.",
        },
        "exam": "Crepitus over left chest wall; saturations 95%.",
        "findings": "Fractures of left ribs 4-6 with a small traumatic "
                    "pneumothorax and surgical emphysema.",
        "differential": "Traumatic pneumothorax; pulmonary contusion.",
        "diagnosis": "Traumatic pneumothorax with rib fractures.",
        "diagnosis_confirmation": "Imaging",
        "discussion": "Traumatic pneumothorax accompanies rib fractures in up "
                      "to half of significant blunt injuries.",
        "treatment": "Small-bore chest drain, analgesia.",
        "followup": "Drain removed day 3.",
        "prognosis": "Full recovery expected.",
        "pathology": "",
        "encounters": [
            {"type": "emergency", "note": "Brought from the sports ground.",
             "facility": "County Trauma Unit", "date": "2004-09-18"},
        ],
        "images": [
            {"caption": "Supine trauma film: deep sulcus sign on the left.",
             "file": "img7105a.png", "modality": "XR", "plane": "AP",
             "width": 486, "height": 612, "format": "png"},
        ],
        "topics": ["4501"],
        "meta": meta("K. Osei MD", "2004-10-02"),
    },
    {
        "uid": "7106",
        "title": "70 yo woman with progressive dyspnea and dull left base.",
        "url": "https://medpix.example.gov/case/7106",
        "acr_code": "60.91",
        "patient": {"sex": "female", "age": "70", "ethnic_group": "Caucasian",
                    "species": "human"},
        "history": {
            "clinical": "Three weeks of progressive breathlessness.",
            "general": "Treated breast carcinoma eight years ago.",
        },
        "exam": "Stony dull left base, absent breath sounds.",
        "findings": "Large left pleural effusion with meniscus; mediastinum "
                    "shifted slightly to the right.",
        "differential": "Malignant effusion; parapneumonic effusion; heart failure.",
        "diagnosis": "Malignant pleural effusion.",
        "diagnosis_confirmation": "Cytology",
        "discussion": "A unilateral effusion in a patient with prior malignancy "
                      "is malignant until proven otherwise.",
        "treatment": "Therapeutic aspiration, then indwelling pleural catheter.",
        "followup": "Symptomatic relief after drainage.",
        "prognosis": "Determined by the underlying malignancy.",
        "pathology": "Adenocarcinoma cells in pleural fluid.",
        "encounters": [
            {"type": "outpatient", "note": "Respiratory clinic referral.",
             "facility": "City Hospital Clinic C", "date": "2005-05-05"},
        ],
        "images": [],
        "topics": ["4504"],
        "meta": meta("T. Sanders MD", "2005-05-19"),
    },
    {
        "uid": "8001",
        "title": "Normal chest radiograph for comparison teaching.",
        "url": "https://medpix.example.gov/case/8001",
        "acr_code": "60.00",
        "patient": {"sex": "male", "age": "35", "ethnic_group": "Caucasian",
                    "species": "human"},
        "history": {
            "clinical": "Pre-employment screening film.",
            "general": "Asymptomatic volunteer.",
        },
        "exam": "Unremarkable.",
        "findings": "Clear lungs, normal cardiomediastinal contour, sharp "
                    "costophrenic angles.",
        "differential": "",
        "diagnosis": "Normal study.",
        "diagnosis_confirmation": "Imaging",
        "discussion": "Kept in the teaching file as the normal comparison.",
        "treatment": "None.",
        "followup": "None.",
        "prognosis": "Not applicable.",
        "pathology": "",
        "encounters": [
            {"type": "outpatient", "note": "Occupational health.",
             "facility": "Works Clinic", "date": "2000-06-01"},
        ],
        "images": [
            {"caption": "Normal PA chest radiograph.",
             "file": "img8001a.png", "modality": "XR", "plane": "PA",
             "width": 486, "height": 612, "format": "png"},
        ],
        "topics": [],
        "meta": meta("Works Clinic", "2000-06-15"),
    },
]

TOPICS = [
    {
        "uid": "9203",
        "title": "Aortic dissection represents a spectrum of abnormalities "
                 "of the thoracic aorta",
        "acr": {"code": "56.71", "category": "Chest", "subcategory": "Aorta"},
        "keywords": ["aortic dissection", "intimal flap", "Stanford classification"],
        "discussion": "Blood enters the media through an intimal tear and "
                      "separates the wall layers, creating true and false "
                      "lumina. Stanford type A involves the ascending aorta "
                      "and is a surgical emergency.",
        "anatomy": "Thoracic aorta: root, arch, descending segment.",
        "pathophysiology": "Medial degeneration predisposes to intimal tearing.",
        "epidemiology": "Peak incidence in the sixth and seventh decades.",
        "url": "https://medpix.example.gov/topic/9203",
        "etiology": "Hypertension, connective tissue disease, trauma.",
        "imaging_findings": "Intimal flap, double lumen, widened mediastinum.",
        "treatment_overview": "Type A surgical, type B usually medical.",
        "prognosis_overview": "Mortality rises hourly without repair.",
        "references": "Teaching file references on thoracic aortic disease.",
        "section": "Cardiovascular",
        "subsection": "Aorta",
        "organ_system": "Cardiovascular",
        "synonyms": ["dissecting aneurysm"],
        "cases": ["9070"],
        "meta": meta("Editorial Board", "1999-12-01"),
    },
    {
        "uid": "4501",
        "title": "Pneumothorax",
        "acr": {"code": "60.23", "category": "Chest", "subcategory": "Pleura"},
        "keywords": ["pneumothorax", "pleural line", "deep sulcus sign"],
        "discussion": "Air in the pleural space separates the visceral and "
                      "parietal pleura. Erect films show a pleural line; on "
                      "supine films look for the deep sulcus sign.",
        "anatomy": "Pleural space between visceral and parietal layers.",
        "pathophysiology": "Loss of negative pleural pressure collapses lung.",
        "epidemiology": "Primary form affects tall young men.",
        "url": "https://medpix.example.gov/topic/4501",
        "etiology": "Spontaneous, traumatic, iatrogenic.",
        "imaging_findings": "Visceral pleural line without peripheral markings.",
        "treatment_overview": "Observation, aspiration, or tube drainage by size.",
        "prognosis_overview": "Recurrence approaches 30% after a first episode.",
        "references": "Standard chest radiology texts.",
        "section": "Thoracic",
        "subsection": "Pleura",
        "organ_system": "Respiratory",
        "synonyms": ["collapsed lung"],
        "cases": ["7102", "7103"],
        "meta": meta("Editorial Board", "2001-04-01"),
    },
    {
        "uid": "4502",
        "title": "Pulmonary embolism",
        "acr": {"code": "60.74", "category": "Chest", "subcategory": "Vascular"},
        "keywords": ["pulmonary embolism", "CTPA", "filling defect"],
        "discussion": "Thrombus from the deep veins lodges in the pulmonary "
                      "arteries. CT pulmonary angiography shows intraluminal "
                      "filling defects; infarcts appear as peripheral wedges.",
        "anatomy": "Pulmonary arterial tree.",
        "pathophysiology": "Ventilation-perfusion mismatch and RV strain.",
        "epidemiology": "Risk rises with immobility, surgery, malignancy.",
        "url": "https://medpix.example.gov/topic/4502",
        "etiology": "Venous thromboembolism.",
        "imaging_findings": "Filling defects, Hampton hump, Westermark sign.",
        "treatment_overview": "Anticoagulation; thrombolysis when unstable.",
        "prognosis_overview": "Good when treated promptly.",
        "references": "Thoracic vascular imaging references.",
        "section": "Thoracic",
        "subsection": "Vascular",
        "organ_system": "Respiratory",
        "synonyms": ["PE"],
        "cases": ["7104"],
        "meta": meta("Editorial Board", "2003-02-01"),
    },
    {
        "uid": "4503",
        "title": "Iatrogenic complications of central venous access",
        "acr": {"code": "60.29", "category": "Chest", "subcategory": "Devices"},
        "keywords": ["central line", "iatrogenic", "complication"],
        "discussion": "Malposition, pneumothorax and vascular injury follow a "
                      "small fraction of central venous punctures; the "
                      "post-procedure film exists to catch them.",
        "anatomy": "Subclavian and internal jugular approaches.",
        "pathophysiology": "Pleural breach during needle passage.",
        "epidemiology": "Pneumothorax in 1-3% of subclavian lines.",
        "url": "https://medpix.example.gov/topic/4503",
        "etiology": "Procedural.",
        "imaging_findings": "Catheter course, apical pneumothorax.",
        "treatment_overview": "Usually observation; drain if enlarging.",
        "prognosis_overview": "Excellent with recognition.",
        "references": "Device placement guidelines.",
        "section": "Thoracic",
        "subsection": "Devices",
        "organ_system": "Respiratory",
        "synonyms": [],
        "cases": ["7105"],
        "meta": meta("Editorial Board", "2002-08-01"),
    },
    {
        "uid": "4504",
        "title": "Pleural effusion",
        "acr": {"code": "60.91", "category": "Chest", "subcategory": "Pleura"},
        "keywords": ["pleural effusion", "meniscus sign"],
        "discussion": "Fluid layers in the dependent pleural space, blunting "
                      "the costophrenic angle and forming a meniscus on erect "
                      "films. Large effusions shift the mediastinum away.",
        "anatomy": "Costophrenic recesses.",
        "pathophysiology": "Transudate or exudate by Light's criteria.",
        "epidemiology": "Common; causes differ sharply by age.",
        "url": "https://medpix.example.gov/topic/4504",
        "etiology": "Heart failure, infection, malignancy.",
        "imaging_findings": "Meniscus, mediastinal shift when large.",
        "treatment_overview": "Treat the cause; drain symptomatic collections.",
        "prognosis_overview": "Depends on etiology.",
        "references": "Pleural disease guidelines.",
        "section": "Thoracic",
        "subsection": "Pleura",
        "organ_system": "Respiratory",
        "synonyms": ["hydrothorax"],
        "cases": ["7106"],
        "meta": meta("Editorial Board", "2005-06-01"),
    },
]

# order: merge history variants, strip the noise, add structure, regroup, rename
PLAN_OPS = (
    [{"op": "merge", "source_id": "case.clinical_history", "target_id": "case.history"}]
    + [{"op": "remove", "element_id": eid} for eid in [
        "case.uid", "case.acr_code", "case.url", "case.contributor",
        "case.contributor_affiliation", "case.editor", "case.reviewer",
        "case.review_date", "case.created", "case.modified", "case.status",
        "case.copyright", "case.species", "case.diagnosis_confirmation",
        "case.followup", "case.prognosis", "case.pathology",
        "case.encounter.facility", "case.encounter.date",
        "case.image.plane", "case.image.width", "case.image.height",
        "case.image.format",
        "topic.uid", "topic.anatomy", "topic.pathophysiology",
        "topic.epidemiology", "topic.url", "topic.contributor",
        "topic.contributor_affiliation", "topic.created", "topic.modified",
        "topic.status", "topic.copyright", "topic.synonym", "topic.etiology",
        "topic.imaging_findings", "topic.treatment_overview",
        "topic.prognosis_overview", "topic.references", "topic.section",
        "topic.subsection", "topic.organ_system",
    ]]
    + [
        {"op": "add_structural", "name": "Personal Data", "parent": "case", "position": 1},
        {"op": "add_structural", "name": "Classification", "parent": "topic", "position": 1},
        {"op": "move", "element_id": "case.sex", "new_parent": "personal-data", "position": 0},
        {"op": "move", "element_id": "case.age", "new_parent": "personal-data", "position": 1},
        {"op": "move", "element_id": "case.ethnic_group", "new_parent": "personal-data", "position": 2},
        {"op": "move", "element_id": "topic.category", "new_parent": "classification", "position": 0},
        {"op": "move", "element_id": "topic.subcategory", "new_parent": "classification", "position": 1},
        {"op": "move", "element_id": "topic.acr_code", "new_parent": "classification", "position": 2},
        {"op": "rename", "element_id": "case.exam", "new_name": "Physical Examination"},
    ]
)

PLAN = {
    "plan_id": "medpix-curation",
    "description": "Strip internal identifiers and image technicalities, group "
                   "patient data and topic classification, clean up names.",
    "authored_schema_version": 0,
    "ops": PLAN_OPS,
}


def write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", "utf-8")


def main() -> int:
    for record in CASES:
        write_json(FIXTURES / "medpix" / "cases" / f"{record['uid']}.json", record)
    for record in TOPICS:
        write_json(FIXTURES / "medpix" / "topics" / f"{record['uid']}.json", record)
    image_dir = FIXTURES / "medpix" / "images"
    image_dir.mkdir(parents=True, exist_ok=True)
    for name, rgb in IMAGES.items():
        (image_dir / name).write_bytes(png_bytes(rgb))
    write_json(FIXTURES / "plans" / "medpix-curation.json", PLAN)
    print(f"wrote {len(CASES)} cases, {len(TOPICS)} topics, "
          f"{len(IMAGES)} images under {FIXTURES}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
