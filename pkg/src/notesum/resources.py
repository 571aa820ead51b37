"""Built-in vocabulary and entity lexicon for synthetic corpora."""

FILLER_WORDS = """
patient was seen today for follow up and reports feeling well overall with good
appetite sleep energy the family is present at bedside plan discussed in detail
will continue current regimen return to clinic in weeks call if any questions
noted on exam vitals stable afebrile alert oriented comfortable no acute distress
lungs clear bilaterally heart regular rate rhythm abdomen soft nontender extremities
warm without edema skin intact neuro grossly nonfocal gait steady independent
history obtained from chart review prior records reviewed medication list updated
allergies reviewed social work consulted physical therapy evaluated discharge home
tolerating diet ambulating hallway voiding spontaneously pain controlled oral
agents wound clean dry dressing changed daily nursing notified overnight events
none significant labs pending imaging reviewed team rounds morning afternoon
evening shift report given handoff completed questions answered understanding
verbalized education provided regarding activity restrictions driving lifting
weight bearing tolerated stairs climbing walker cane assistance minimal moderate
maximal supervision required occupational speech swallow screen passed diet
advanced regular consistency thin liquids aspiration precautions bed alarm fall
risk score assessed mobility improving steadily strength intact upper lower
sensation preserved reflexes symmetric pupils equal reactive light accommodation
mucous membranes moist neck supple jugular venous pressure flat carotid upstroke
brisk chest wall nontender percussion resonant breath sounds vesicular bowel
sounds present liver edge palpable spleen tip nonpalpable pulses palpable distal
capillary refill brisk cyanosis clubbing absent mood affect appropriate judgment
insight fair cooperative pleasant conversant appears stated age resting quietly
telemetry monitoring reviewed overnight alarms brief episodes asymptomatic rates
controlled goals care readdressed code status confirmed full proxy identified
daughter son wife husband sister brother friend neighbor caregiver visiting
afternoon weekend holiday schedule arranged transportation pharmacy benefits
insurance authorization obtained outpatient referral placed primary provider
updated letter faxed records requested outside hospital transfer accepted
""".split()

# chronic, disease-specific findings that tend to be restated in later notes
PERSISTENT_ENTITIES = [
    "congestive heart failure", "chronic systolic heart failure", "atrial fibrillation",
    "coronary artery disease", "coronary artery bypass grafting", "aortic stenosis",
    "mitral regurgitation", "valve replacement", "hypertension", "hyperlipidemia",
    "diabetes mellitus", "chronic kidney disease", "copd", "pulmonary hypertension",
    "cardiomyopathy", "myocardial infarction", "pacemaker", "defibrillator",
    "stent placement", "cardiac catheterization", "anemia", "hypothyroidism",
    "peripheral vascular disease", "stroke", "sleep apnea", "obesity",
    "warfarin", "clopidogrel", "metoprolol", "lisinopril", "furosemide",
    "atorvastatin", "amiodarone", "digoxin", "spironolactone", "carvedilol",
]

# one-off orders and routine labs that rarely recur
TRANSIENT_ENTITIES = [
    "hemoglobin", "hematocrit", "creatinine", "bun", "potassium", "sodium",
    "vanco level", "blood culture", "chest x-ray", "urinalysis", "glucose",
    "platelet count", "magnesium", "troponin", "lactate", "bilirubin",
    "albumin", "lipase", "amylase", "ammonia", "ferritin", "phosphate",
    "calcium", "chloride", "bicarbonate", "anion gap", "inr", "ptt",
    "fibrinogen", "d-dimer", "crp", "esr", "procalcitonin", "tsh",
    "urine culture", "sputum culture", "wound culture", "stool culture",
    "arterial blood gas", "venous blood gas", "ck-mb", "bnp", "lfts",
    "ct head", "ct abdomen", "ct chest", "mri brain", "renal ultrasound",
    "abdominal ultrasound", "doppler study", "echocardiogram", "ekg",
    "holter monitor", "stress test", "kub film", "lumbar puncture",
    "paracentesis", "thoracentesis", "foley catheter", "picc line",
    "central line", "nasogastric tube", "ivf bolus", "tylenol", "zofran",
    "ceftriaxone", "zosyn", "levofloxacin", "azithromycin", "potassium chloride",
    "magnesium sulfate", "insulin sliding scale", "heparin drip", "morphine",
    "ativan", "haldol", "nebulizer treatment", "oxygen by nasal cannula",
]

DEFAULT_LEXICON = PERSISTENT_ENTITIES + TRANSIENT_ENTITIES
