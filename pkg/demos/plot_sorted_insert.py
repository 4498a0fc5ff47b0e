"""
Keeping a list sorted under contention
======================================

Two writers want to insert 20 and 30 into the gap before 40. Both searches
stop at 40. Whichever insert lands first makes the other cursor's
insertBefore return invalidCursor, so the second writer searches again and
lands in order. The bench's sorted workload does this in a loop.
"""

from nbdll import EOL, INVALID_CURSOR, ListHandle

lst = ListHandle()
c = lst.create_cursor()
for k in [10, 40]:
    lst.insert_before(c, k)
lst.destroy_cursor(c)


def search(c, key):
    lst.reset_cursor(c)
    v = lst.get(c)
    while v is not EOL and v is not INVALID_CURSOR and v < key:
        lst.move_right(c)
        v = lst.get(c)
    return v


p, q = lst.create_cursor("p"), lst.create_cursor("q")
print("p stops at", search(p, 30), "| q stops at", search(q, 20))

# p wins the gap
print("p inserts 30:", lst.insert_before(p, 30))

# without the check q would put 20 after 30
r = lst.insert_before(q, 20)
print("q inserts 20:", r)
assert r is INVALID_CURSOR

print("q searches again, stops at", search(q, 20))
print("q inserts 20:", lst.insert_before(q, 20))
print("list:", lst.values())
vals = lst.values()[:-1]
assert vals == sorted(vals)
