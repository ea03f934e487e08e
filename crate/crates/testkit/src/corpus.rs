//! Fixture corpus shared by the integration and acceptance suites.
//!
//! Twenty small models written in the shorthand dialect, chosen to cover
//! every structural feature the toolkit handles: reversibility, explicit
//! stoichiometric coefficients, modifiers, boundary/constant species,
//! multiple compartments, local parameters, SBO tags, MIRIAM annotations,
//! and empty reaction sides.  Ten of the models carry annotations and form
//! the clustering corpus.  `glucose_import` / `glucose_phosphorylation`
//! share a glucose species (same ChEBI `is` URI) whose initial amounts
//! disagree, which makes them the canonical merge-conflict pair.
//!
//! Every model contributes at least one element (a parameter, species, or
//! reaction with a corpus-unique, unannotated id) that no other model can
//! absorb, so merging any ordered pair of distinct fixtures always changes
//! the left model.  The diff/merge law tests rely on that property.

use sbmlkit::model::require_valid;
use sbmlkit::shorthand::parse_shorthand;
use sbmlkit::ModelDocument;

/// The reference two-species mass-action model, kept verbatim: one default
/// compartment, species A and B, parameters kf and kr, and one reaction
/// `A -> B` with the law `kf*A-kr*B`.
pub const MYMODEL_LISTING: &str = "@model:2.4.1=MyModel
@compartments
  default=1
@species
  default:A=1
  default:B=1
@parameters
  kf=1
  kr=1
@reactions
@rxn=reaction1
A -> B
kf*A-kr*B
";

/// A named fixture model in shorthand form.
#[derive(Debug, Clone, Copy)]
pub struct Fixture {
    pub name: &'static str,
    pub shorthand: &'static str,
}

impl Fixture {
    /// Parse the shorthand source; panics if the fixture is malformed
    /// (fixtures are validated by the testkit's own unit tests).
    pub fn document(&self) -> ModelDocument {
        let doc = parse_shorthand(self.shorthand)
            .unwrap_or_else(|e| panic!("fixture `{}` does not parse: {e}", self.name));
        require_valid(&doc)
            .unwrap_or_else(|e| panic!("fixture `{}` does not validate: {e}", self.name));
        doc
    }
}

const GLUCOSE_IMPORT: &str = "@model:2.4.1=GlucoseImport
@compartments
  cytosol=1
@species
  cytosol:glc=1
@parameters
  v_import=0.2
@reactions
@rxn=import_glc
-> glc
v_import
@annotations
  glc is identifiers.org/obo.chebi/CHEBI:17234
  glc isVersionOf identifiers.org/kegg.compound/C00031
  import_glc isVersionOf identifiers.org/obo.go/GO:0046323
";

const GLUCOSE_PHOSPHORYLATION: &str = "@model:2.4.1=GlucosePhosphorylation
@compartments
  cytosol=1
@species
  cytosol:glc=2
  cytosol:g6p=0.5
@parameters
  k_hxk=0.1
@reactions
@rxn=hexokinase
glc -> g6p
k_hxk*glc
@annotations
  glc is identifiers.org/obo.chebi/CHEBI:17234
  g6p is identifiers.org/obo.chebi/CHEBI:4170
  hexokinase isVersionOf identifiers.org/ec-code/2.7.1.1
";

const GLYCOLYSIS_UPPER: &str = "@model:2.4.1=GlycolysisUpper
@compartments
  cytosol=1
@species
  cytosol:glc=5
  cytosol:g6p=0.5
  cytosol:f6p=0.5
  cytosol:fbp=0.1
@parameters
  k_hk=0.9
  k_pgi=1.5
  k_pfk=0.7
@reactions
@rxn=hk
glc -> g6p
k_hk*glc
@rxn=pgi
g6p <-> f6p
k_pgi*(g6p-f6p)
@rxn=pfk
f6p -> fbp
k_pfk*f6p
@annotations
  glc is identifiers.org/obo.chebi/CHEBI:17234
  g6p is identifiers.org/obo.chebi/CHEBI:4170
  f6p is identifiers.org/obo.chebi/CHEBI:16084
  fbp is identifiers.org/obo.chebi/CHEBI:16905
  hk isVersionOf identifiers.org/ec-code/2.7.1.1
  pgi isVersionOf identifiers.org/ec-code/5.3.1.9
  pfk isVersionOf identifiers.org/ec-code/2.7.1.11
";

const GLYCOLYSIS_LOWER: &str = "@model:2.4.1=GlycolysisLower
@compartments
  cytosol=1
@species
  cytosol:gap=0.2
  cytosol:bpg=0.1
  cytosol:pep=0.3
  cytosol:pyr=1
@parameters
  k_gapdh=2
  k_enol=1.1
  k_pk=0.8
@reactions
@rxn=gapdh
gap <-> bpg
k_gapdh*(gap-bpg)
@rxn=enolase
bpg -> pep
k_enol*bpg
@rxn=pk
pep -> pyr
k_pk*pep
@annotations
  gap is identifiers.org/obo.chebi/CHEBI:29052
  bpg is identifiers.org/obo.chebi/CHEBI:16001
  pep is identifiers.org/obo.chebi/CHEBI:18021
  pyr is identifiers.org/obo.chebi/CHEBI:15361
  pk isVersionOf identifiers.org/ec-code/2.7.1.40
";

const TCA_CORE: &str = "@model:2.4.1=TcaCore
@compartments
  mito=1
@species
  mito:pyr=0.5
  mito:accoa=0.2
  mito:cit=1
  mito:akg=0.4
  mito:suc=0.3
@parameters
  k_pdh=0.6
  k_cs=1.2
  k_idh=0.9
  k_kgd=0.5
@reactions
@rxn=pdh
pyr -> accoa
k_pdh*pyr
@rxn=cs
accoa -> cit
k_cs*accoa
@rxn=idh
cit -> akg
k_idh*cit
@rxn=kgd
akg -> suc
k_kgd*akg
@annotations
  pyr is identifiers.org/obo.chebi/CHEBI:15361
  accoa is identifiers.org/obo.chebi/CHEBI:15351
  cit is identifiers.org/obo.chebi/CHEBI:16947
  akg is identifiers.org/obo.chebi/CHEBI:16810
  suc is identifiers.org/obo.chebi/CHEBI:15741
";

const PPP_OXIDATIVE: &str = "@model:2.4.1=PppOxidative
@compartments
  cytosol=1
@species
  cytosol:g6p=0.5
  cytosol:pgl=0.1
  cytosol:ru5p=0.2
@parameters
  k_g6pd=0.4
  k_lact=1.3
@reactions
@rxn=g6pd
g6p -> pgl
k_g6pd*g6p
@rxn=lactonase
pgl -> ru5p
k_lact*pgl
@annotations
  g6p is identifiers.org/obo.chebi/CHEBI:4170
  pgl is identifiers.org/obo.chebi/CHEBI:16938
  ru5p is identifiers.org/obo.chebi/CHEBI:17363
  g6pd isVersionOf identifiers.org/ec-code/1.1.1.49
";

const UREA_CYCLE: &str = "@model:2.4.1=UreaCycle
@compartments
  cytosol=1
@species
  cytosol:orn=0.3
  cytosol:citr=0.2
  cytosol:arg=0.4
  cytosol:urea=1
@parameters
  k_otc=0.7
  k_ass=0.5
  k_arg1=1.4
@reactions
@rxn=otc
orn -> citr
k_otc*orn
@rxn=ass
citr -> arg
k_ass*citr
@rxn=arg1
arg -> orn + urea
k_arg1*arg
@annotations
  orn is identifiers.org/obo.chebi/CHEBI:15729
  citr is identifiers.org/obo.chebi/CHEBI:16349
  arg is identifiers.org/obo.chebi/CHEBI:16467
  urea is identifiers.org/obo.chebi/CHEBI:16199
";

const KINASE_CASCADE: &str = "@model:2.4.1=KinaseCascade
@compartments
  cytosol=1
@species
  cytosol:mek=0.5
  cytosol:erk=1
  cytosol:erk_p=0
@parameters
  k_phos=0.3
  k_dephos=0.1
@reactions
@rxn=phos
erk -> erk_p : mek
k_phos*erk*mek
@rxn=dephos
erk_p -> erk
k_dephos*erk_p
@annotations
  mek is identifiers.org/uniprot/Q02750
  erk is identifiers.org/uniprot/P28482
  erk_p isVersionOf identifiers.org/uniprot/P28482
";

const GLUCOSE_TRANSPORT: &str = "@model:2.4.1=GlucoseTransport
@compartments
  extern=10
  cytosol=1
@species
  extern:glc_ext=5 b
  cytosol:glc=1
@parameters
  v_glut=0.25
@reactions
@rxn=glut1
glc_ext -> glc
v_glut*(glc_ext-glc)
@annotations
  glc_ext is identifiers.org/obo.chebi/CHEBI:17234
  glc is identifiers.org/obo.chebi/CHEBI:17234
  glut1 isVersionOf identifiers.org/uniprot/P11166
";

const SUCROSE_HYDROLYSIS: &str = "@model:2.4.1=SucroseHydrolysis
@compartments
  gut=1
@species
  gut:sucr=2
  gut:fru=0
@parameters
  v_max=1.5
  k_m=0.4
@reactions
@rxn=invertase
sucr -> fru
v_max*sucr/(k_m+sucr)
@annotations
  sucr is identifiers.org/obo.chebi/CHEBI:17992
  fru is identifiers.org/obo.chebi/CHEBI:28757
  invertase isVersionOf identifiers.org/ec-code/3.2.1.26
";

const BRANCH_POINT: &str = "@model:2.4.1=BranchPoint
@compartments
  cell=1
@species
  cell:A=2
  cell:B=0.5
  cell:C=0.5
@parameters
  k1=0.4
  k2=0.6
@reactions
@rxn=to_b
A -> B
k1*A
@rxn=to_c
A -> C
k2*A
";

const TRIANGLE_LOOP: &str = "@model:2.4.1=TriangleLoop
@compartments
  cell=1
@species
  cell:x1=1
  cell:x2=1
  cell:x3=1
@parameters
  q12=1
  q23=1
  q13=1
@reactions
@rxn=r12
x1 <-> x2
q12*(x1-x2)
@rxn=r23
x2 <-> x3
q23*(x2-x3)
@rxn=r13
x1 <-> x3
q13*(x1-x3)
";

const DIMERIZATION: &str = "@model:2.4.1=Dimerization
@compartments
  cell=1
@species
  cell:mono=4
  cell:dimer=0
@parameters
  k_on=0.05
  k_off=0.2
@reactions
@rxn=dimerize
2 mono <-> dimer
k_on*mono^2-k_off*dimer
";

const OPEN_SYSTEM: &str = "@model:2.4.1=OpenSystem
@compartments
  cell=1
@species
  cell:src=10 b c
  cell:mid=1
  cell:snk=0 b
@parameters
  k_in=0.3
  k_out=0.2
@reactions
@rxn=inflow
src -> mid
k_in*src
@rxn=outflow
mid -> snk
k_out*mid
";

const NUCLEUS_SHUTTLE: &str = "@model:2.4.1=NucleusShuttle
@compartments
  cytosol=2
  nucleus=0.5
@species
  cytosol:tf_c=1
  nucleus:tf_n=0.1
@parameters
  k_imp=0.4
  k_exp=0.3
@reactions
@rxn=import_tf
tf_c -> tf_n
k_imp*tf_c
@rxn=export_tf
tf_n -> tf_c
k_exp*tf_n
";

const MODULAR_TOY: &str = "@model:2.4.1=ModularToy
@compartments
  cell=1
@species
  cell:s_a=0.5
  cell:s_b=0.5
@reactions
@rxn=conv
s_a <-> s_b
u*(kcat_fwd*(s_a/km_a)-kcat_rev*(s_b/km_b))/((1+s_a/km_a)+(1+s_b/km_b)-1)
@local:kcat_fwd=10
@local:kcat_rev=5
@local:u=0.001
@local:km_a=0.1
@local:km_b=0.2
";

const KEGG_GLUCOSE: &str = "@model:2.4.1=KeggGlucose
@compartments
  cytosol=1
@species
  cytosol:glucose=1
@parameters
  v_use=0.1
@reactions
@rxn=consume
glucose ->
v_use*glucose
@annotations
  glucose is identifiers.org/kegg.compound/C00031
";

const TAGGED_DECAY: &str = "@model:2.4.1=TaggedDecay
@compartments
  cell=1
@species
  cell:prot=1 !SBO:0000252
@parameters
  k_deg=0.05 !SBO:0000356
@reactions
@rxn=decay !SBO:0000179
prot ->
k_deg*prot
";

const FUTILE_CYCLE: &str = "@model:2.4.1=FutileCycle
@compartments
  cell=1
@species
  cell:f6p_f=1
  cell:fbp_f=0.5
@parameters
  v_fwd=0.6
  v_bwd=0.4
@reactions
@rxn=kinase_step
f6p_f -> fbp_f
v_fwd*f6p_f
@rxn=phosphatase_step
fbp_f -> f6p_f
v_bwd*fbp_f
";

/// The full twenty-model fixture corpus, reference model first.
pub const CORPUS: &[Fixture] = &[
    Fixture { name: "mymodel", shorthand: MYMODEL_LISTING },
    Fixture { name: "glucose_import", shorthand: GLUCOSE_IMPORT },
    Fixture { name: "glucose_phosphorylation", shorthand: GLUCOSE_PHOSPHORYLATION },
    Fixture { name: "glycolysis_upper", shorthand: GLYCOLYSIS_UPPER },
    Fixture { name: "glycolysis_lower", shorthand: GLYCOLYSIS_LOWER },
    Fixture { name: "tca_core", shorthand: TCA_CORE },
    Fixture { name: "ppp_oxidative", shorthand: PPP_OXIDATIVE },
    Fixture { name: "urea_cycle", shorthand: UREA_CYCLE },
    Fixture { name: "kinase_cascade", shorthand: KINASE_CASCADE },
    Fixture { name: "glucose_transport", shorthand: GLUCOSE_TRANSPORT },
    Fixture { name: "sucrose_hydrolysis", shorthand: SUCROSE_HYDROLYSIS },
    Fixture { name: "branch_point", shorthand: BRANCH_POINT },
    Fixture { name: "triangle_loop", shorthand: TRIANGLE_LOOP },
    Fixture { name: "dimerization", shorthand: DIMERIZATION },
    Fixture { name: "open_system", shorthand: OPEN_SYSTEM },
    Fixture { name: "nucleus_shuttle", shorthand: NUCLEUS_SHUTTLE },
    Fixture { name: "modular_toy", shorthand: MODULAR_TOY },
    Fixture { name: "kegg_glucose", shorthand: KEGG_GLUCOSE },
    Fixture { name: "tagged_decay", shorthand: TAGGED_DECAY },
    Fixture { name: "futile_cycle", shorthand: FUTILE_CYCLE },
];

/// Names of the ten annotated models used as the clustering corpus.
pub const CLUSTERING_NAMES: [&str; 10] = [
    "glucose_import",
    "glucose_phosphorylation",
    "glycolysis_upper",
    "glycolysis_lower",
    "tca_core",
    "ppp_oxidative",
    "urea_cycle",
    "kinase_cascade",
    "glucose_transport",
    "sucrose_hydrolysis",
];

/// Look up a fixture by name; panics on an unknown name so that tests fail
/// loudly when a fixture is renamed.
pub fn fixture(name: &str) -> &'static Fixture {
    CORPUS
        .iter()
        .find(|f| f.name == name)
        .unwrap_or_else(|| panic!("no fixture named `{name}`"))
}

/// Parse the whole corpus.
pub fn documents() -> Vec<ModelDocument> {
    CORPUS.iter().map(|f| f.document()).collect()
}

/// The canonical merge-conflict pair: both models contain a glucose species
/// annotated `is identifiers.org/obo.chebi/CHEBI:17234`, with initial
/// amounts 1 and 2.  Merging them under the fail policy aborts with exactly
/// one conflict on that species' `initial_amount`.
pub fn conflict_pair() -> (ModelDocument, ModelDocument) {
    (
        fixture("glucose_import").document(),
        fixture("glucose_phosphorylation").document(),
    )
}

/// The ten annotated models, as (label, document) pairs in corpus order.
pub fn clustering_corpus() -> Vec<(String, ModelDocument)> {
    CLUSTERING_NAMES
        .iter()
        .map(|name| (name.to_string(), fixture(name).document()))
        .collect()
}

/// A small annotation-store record fixture: five compounds with synonyms,
/// KEGG cross-references, and one ontology relation.  Three records carry a
/// name containing "gluc"; ChEBI 17234 and KEGG C00031 fall in one
/// cross-reference class.
pub const ANNODB_FIXTURE_TSV: &str = "\
# PrimaryURI\tNames\tCrossRefs\tRelations
identifiers.org/obo.chebi/CHEBI:17234\tglucose|D-glucose|dextrose\tidentifiers.org/kegg.compound/C00031\t
identifiers.org/obo.chebi/CHEBI:15422\tATP|adenosine 5'-triphosphate\tidentifiers.org/kegg.compound/C00002\t
identifiers.org/obo.chebi/CHEBI:4167\tD-glucopyranose\tidentifiers.org/kegg.compound/C00267\tis_a=identifiers.org/obo.chebi/CHEBI:17234
identifiers.org/obo.chebi/CHEBI:17925\talpha-D-glucose\tidentifiers.org/kegg.compound/C00267\t
identifiers.org/obo.chebi/CHEBI:15377\twater|H2O\tidentifiers.org/kegg.compound/C00001\t
";
