package com.ex;

import java.util.ArrayDeque;
import java.util.Deque;

/**
 * A last-in first-out buffer of integers.
 */
public class Buffer {
    private final Deque<Integer> items = new ArrayDeque<>();

    public static Buffer createEmpty() {
        return new Buffer();
    }

    public boolean isEmpty() {
        return items.isEmpty();
    }

    public void push(int value) {
        items.push(value);
    }

    /**
     * Removes the most recently pushed value.
     *
     * @return the removed value
     */
    public int pop() {
        if (items.isEmpty()) {
            throw new IllegalStateException("empty buffer");
        }
        return items.pop();
    }
}
