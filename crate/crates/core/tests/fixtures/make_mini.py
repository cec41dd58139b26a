"""Regenerates tests/fixtures/mini. Output is deterministic."""
import os
import random

random.seed(7)
D = 8
OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "mini")

# (english, spanish, cluster)
WORDS = [
    ("cat", "gato", 0), ("dog", "perro", 0), ("horse", "caballo", 0), ("bird", "pajaro", 0),
    ("fish", "pez", 0), ("mouse", "raton", 0),
    ("car", "coche", 1), ("bus", "autobus", 1), ("train", "tren", 1), ("bike", "bicicleta", 1),
    ("plane", "avion", 1), ("boat", "barco", 1),
    ("bread", "pan", 2), ("apple", "manzana", 2), ("milk", "leche", 2), ("cheese", "queso", 2),
    ("rice", "arroz", 2), ("soup", "sopa", 2),
    ("red", "rojo", 3), ("green", "verde", 3), ("blue", "azul", 3), ("black", "negro", 3),
    ("white", "blanco", 3), ("small", "pequeno", 3),
    ("the", "el", 4), ("eats", "come", 4), ("sees", "ve", 4), ("has", "tiene", 4),
    ("big", "grande", 3), ("house", "casa", 4),
]
centers = [[random.gauss(0, 1) for _ in range(D)] for _ in range(5)]
en = {}
for e, _, c in WORDS:
    en[e] = [centers[c][k] + 0.6 * random.gauss(0, 1) for k in range(D)]

# source (es) vectors: x = A e + noise, so a linear map recovers e
A = [[random.gauss(0, 1) / D ** 0.5 + (1.0 if i == j else 0.0) for j in range(D)] for i in range(D)]
es = {}
for e, s, _ in WORDS:
    es[s] = [sum(A[i][j] * en[e][j] for j in range(D)) + 0.02 * random.gauss(0, 1) for i in range(D)]


def write_emb(path, table, header):
    with open(path, "w") as f:
        if header:
            f.write(f"{len(table)} {D}\n")
        for w, v in table.items():
            f.write(w + " " + " ".join(f"{x:.6f}" for x in v) + "\n")


write_emb(os.path.join(OUT, "es.vec"), es, True)
write_emb(os.path.join(OUT, "en.txt"), en, False)

order = list(range(len(WORDS)))
random.shuffle(order)
with open(os.path.join(OUT, "train.pairs"), "w") as f:
    f.write("# spanish\tenglish\n")
    for i in order[:20]:
        f.write(f"{WORDS[i][1]}\t{WORDS[i][0]}\n")
    f.write("xyzzy\tplugh\n")
with open(os.path.join(OUT, "test.pairs"), "w") as f:
    for i in order[20:]:
        f.write(f"{WORDS[i][1]}\t{WORDS[i][0]}\n")

sts = [
    ("el gato come pan", "the cat eats bread", 5.0),
    ("el perro ve el coche", "the dog sees the car", 5.0),
    ("el caballo tiene queso", "the horse has cheese", 4.8),
    ("el gato come pan", "the dog eats rice", 3.6),
    ("el tren rojo", "the blue bus", 3.0),
    ("el pajaro come arroz", "the car has milk", 1.2),
    ("la casa verde", "the red train", 1.4),
    ("el raton come queso", "the black plane", 0.4),
    ("la sopa blanca", "the bike", 0.2),
    ("el barco grande", "the big boat!", 4.6),
]
with open(os.path.join(OUT, "sts.tsv"), "w") as f:
    for a, b, g in sts:
        f.write(f"{a}\t{b}\t{g}\n")

doc_s = ["el gato come pan", "el coche rojo", "la leche blanca", "el perro ve el avion"]
doc_t = ["the dog sees the plane", "the white milk", "the cat eats bread", "the green apple"]
with open(os.path.join(OUT, "doc_s.txt"), "w") as f:
    f.write("\n".join(doc_s) + "\n")
with open(os.path.join(OUT, "doc_t.txt"), "w") as f:
    f.write("\n".join(doc_t) + "\n")
with open(os.path.join(OUT, "doc.gold"), "w") as f:
    f.write("0\t2\n2\t1\n3\t0\n")

susp = [
    "el caballo come manzana",
    "el gato ve el tren",
    "el perro tiene queso",
    "la casa azul",
    "el barco negro",
]
src_a = [
    "the bird has soup",
    "the cat sees the train",
    "the dog has cheese",
    "the small mouse",
]
src_b = [
    "the red bike",
    "the green bus",
    "the horse eats rice",
]


def offsets(lines, first, last):
    starts, pos = [], 0
    for line in lines:
        starts.append(pos)
        pos += len(line) + 1
    return starts[first], starts[last] + len(lines[last])


for name, lines in [("susp.txt", susp), ("src_a.txt", src_a), ("src_b.txt", src_b)]:
    with open(os.path.join(OUT, name), "w") as f:
        f.write("\n".join(lines) + "\n")
with open(os.path.join(OUT, "plag.gold"), "w") as f:
    s0, s1 = offsets(susp, 1, 2)
    t0, t1 = offsets(src_a, 1, 2)
    f.write(f"{s0}\t{s1}\tsrc_a\t{t0}\t{t1}\n")
