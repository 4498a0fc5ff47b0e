"""
Cursors on a shared list
========================

Each thread walks the list with its own cursor. An update made through one
cursor can make another cursor's next operation return invalidCursor.
"""

from nbdll import INVALID_CURSOR, ListHandle

lst = ListHandle()
a = lst.create_cursor("a")

# insertBefore keeps the cursor on the item it was on (here EOL)
for v in [10, 20, 30]:
    lst.insert_before(a, v)
print("list:", lst.values())

# a second cursor starts at the first item
b = lst.create_cursor("b")
print("b sees", lst.get(b))

# deleting the item under b moves b along and flags it once
lst.reset_cursor(a)
lst.delete(a)
r = lst.get(b)
print("b after delete:", r)
assert r is INVALID_CURSOR
print("b next get:", lst.get(b))

# moves only read shared memory
lst.move_right(b)
print("b moved to", lst.get(b))
print("backward:", lst.values_backward())
